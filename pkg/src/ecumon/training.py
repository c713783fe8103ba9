"""End-to-end model fitting: cleanse, split, normalize, train, calibrate.

Stage order matters: the normalizer is fitted on the training part only,
the autoencoder trains on training frames with validation-based
checkpointing, the residual profile comes from validation residuals,
and the forest bank fits on training frames (healthy data only, since
substitution must estimate true values). One master seed drives every
stage through deterministically derived sub-seeds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .artifact import ModelArtifact
from .autoencoder import TrainConfig, TrainTrace, init_model, train
from .calibration import fit_profile, residuals
from .domain import Dataset, SplitDataset
from .forest import ForestConfig, default_feature_counts, fit_bank
from .preprocessing import CleansingReport, cleanse, fit_normalizer, normalize, split


@dataclass(frozen=True)
class TrainingResult:
    artifact: ModelArtifact
    splits: SplitDataset
    cleansing: CleansingReport
    trace: TrainTrace
    feature_counts: dict[int, int]


def derive_seeds(master_seed: int, n: int) -> list[int]:
    """Independent integer sub-seeds derived deterministically from one master."""
    return [int(child.generate_state(1)[0]) for child in np.random.SeedSequence(master_seed).spawn(n)]


def train_pipeline(
    dataset: Dataset,
    seed: int,
    ae_config: TrainConfig | None = None,
    forest_config: ForestConfig | None = None,
    feature_counts: Mapping[int, int] | None = None,
) -> TrainingResult:
    """Fit every pipeline component from raw telemetry.

    The ``seed`` fields of the supplied configs are replaced with
    sub-seeds derived from ``seed``, so a single integer reproduces the
    whole run.
    """
    split_seed, init_seed, shuffle_seed, forest_seed = derive_seeds(seed, 4)
    ae_config = ae_config or TrainConfig()
    forest_config = forest_config or ForestConfig()
    ae_config = TrainConfig(
        epochs=ae_config.epochs,
        batch_size=ae_config.batch_size,
        learning_rate=ae_config.learning_rate,
        seed=shuffle_seed,
        early_stop_patience=ae_config.early_stop_patience,
    )
    forest_config = ForestConfig(
        n_trees=forest_config.n_trees,
        max_depth=forest_config.max_depth,
        min_samples_leaf=forest_config.min_samples_leaf,
        features_per_split=forest_config.features_per_split,
        seed=forest_seed,
        bootstrap=forest_config.bootstrap,
    )

    clean, report = cleanse(dataset)
    splits = split(clean, split_seed)
    normalizer = fit_normalizer(splits.train)
    train_n = normalize(splits.train, normalizer)
    val_n = normalize(splits.validation, normalizer)

    model, trace = train(init_model(init_seed), train_n, val_n, ae_config)
    profile = fit_profile(residuals(model, val_n))

    counts = dict(feature_counts) if feature_counts else default_feature_counts(dataset.catalog)
    bank = fit_bank(train_n, counts, forest_config)

    artifact = ModelArtifact(
        catalog_fingerprint=dataset.catalog.fingerprint(),
        normalizer=normalizer,
        autoencoder=model,
        profile=profile,
        bank=bank,
        metadata={
            "master_seed": seed,
            "derived_seeds": {
                "split": split_seed,
                "autoencoder_init": init_seed,
                "autoencoder_shuffle": shuffle_seed,
                "forest": forest_seed,
            },
            "train_config": {
                "epochs": ae_config.epochs,
                "batch_size": ae_config.batch_size,
                "learning_rate": ae_config.learning_rate,
                "early_stop_patience": ae_config.early_stop_patience,
            },
            "forest_config": {
                "n_trees": forest_config.n_trees,
                "max_depth": forest_config.max_depth,
                "min_samples_leaf": forest_config.min_samples_leaf,
                "features_per_split": forest_config.features_per_split,
                "bootstrap": forest_config.bootstrap,
            },
            "feature_counts": {str(k): v for k, v in sorted(counts.items())},
            "rows": {
                "input": report.rows_in,
                "dropped_nonfinite": report.rows_dropped_nonfinite,
                "dropped_out_of_range": report.rows_dropped_out_of_range,
                "train": len(splits.train),
                "validation": len(splits.validation),
                "test": len(splits.test),
            },
            "completed_epochs": len(trace),
            "best_epoch": trace.best_epoch,
        },
    )
    return TrainingResult(
        artifact=artifact,
        splits=splits,
        cleansing=report,
        trace=trace,
        feature_counts=counts,
    )
