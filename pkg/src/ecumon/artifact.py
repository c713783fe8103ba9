"""Bundled model artifact: one self-describing, versioned JSON document.

A single file holds every fitted component (normalizer, autoencoder,
residual profile, forest bank) plus training metadata, bound to the
catalog it was trained against through a fingerprint that is re-verified
on load. Parameters serialize as plain decimal text via Python's
shortest round-trip float repr, so a write/read cycle reproduces every
coefficient bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .autoencoder import AutoencoderModel, Layer
from .calibration import ResidualProfile
from .domain import HealthIndex, SensorCatalog
from .errors import ArtifactFormatError, FingerprintMismatchError
from .forest import FlatTree, ForestBank, ForestConfig, ForestModel, unflatten_tree
from .monitor import MonitorPipeline
from .preprocessing import NormalizationParams

FORMAT_VERSION = 1


@dataclass(frozen=True)
class ModelArtifact:
    """Everything needed to reassemble a monitoring pipeline."""

    catalog_fingerprint: str
    normalizer: NormalizationParams
    autoencoder: AutoencoderModel
    profile: ResidualProfile
    bank: ForestBank
    metadata: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def to_json_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "catalog_fingerprint": self.catalog_fingerprint,
            "normalizer": {
                "minimum": self.normalizer.minimum.tolist(),
                "maximum": self.normalizer.maximum.tolist(),
            },
            "autoencoder": {
                "layers": [
                    {
                        "activation": layer.activation,
                        "shape": list(layer.weights.shape),
                        "weights": layer.weights.reshape(-1).tolist(),  # row-major
                        "biases": layer.biases.tolist(),
                    }
                    for layer in self.autoencoder.layers
                ]
            },
            "residual_profile": {
                "mean": self.profile.mean.tolist(),
                "std": self.profile.std.tolist(),
                "n_samples": self.profile.n_samples,
            },
            "forest_bank": {
                "forests": [_forest_to_dict(model) for model in self.bank.forests]
            },
            "metadata": self.metadata,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ModelArtifact":
        try:
            version = int(doc["format_version"])
            if version != FORMAT_VERSION:
                raise ArtifactFormatError(
                    f"unsupported artifact format_version {version}; this reader supports {FORMAT_VERSION}"
                )
            normalizer = NormalizationParams(
                minimum=np.array(doc["normalizer"]["minimum"], dtype=np.float64),
                maximum=np.array(doc["normalizer"]["maximum"], dtype=np.float64),
            )
            layers = tuple(
                Layer(
                    weights=np.array(entry["weights"], dtype=np.float64).reshape(entry["shape"]),
                    biases=np.array(entry["biases"], dtype=np.float64),
                    activation=str(entry["activation"]),
                )
                for entry in doc["autoencoder"]["layers"]
            )
            profile = ResidualProfile(
                mean=np.array(doc["residual_profile"]["mean"], dtype=np.float64),
                std=np.array(doc["residual_profile"]["std"], dtype=np.float64),
                n_samples=int(doc["residual_profile"]["n_samples"]),
            )
            bank = ForestBank(
                tuple(_forest_from_dict(entry) for entry in doc["forest_bank"]["forests"])
            )
            return cls(
                catalog_fingerprint=str(doc["catalog_fingerprint"]),
                normalizer=normalizer,
                autoencoder=AutoencoderModel(layers),
                profile=profile,
                bank=bank,
                metadata=dict(doc.get("metadata", {})),
                format_version=version,
            )
        except ArtifactFormatError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ArtifactFormatError(f"malformed artifact document: {exc}") from exc


def _forest_to_dict(model: ForestModel) -> dict:
    return {
        "target_sensor": model.target_sensor,
        "feature_ids": list(model.feature_ids),
        "config": {
            "n_trees": model.config.n_trees,
            "max_depth": model.config.max_depth,
            "min_samples_leaf": model.config.min_samples_leaf,
            "features_per_split": model.config.features_per_split,
            "seed": model.config.seed,
            "bootstrap": model.config.bootstrap,
        },
        "trees": [
            {
                "feature": flat.feature.tolist(),
                "threshold": flat.threshold.tolist(),
                "left": flat.left.tolist(),
                "right": flat.right.tolist(),
                "value": flat.value.tolist(),
            }
            for flat in model.flat_trees
        ],
    }


def _forest_from_dict(doc: dict) -> ForestModel:
    cfg = doc["config"]
    config = ForestConfig(
        n_trees=int(cfg["n_trees"]),
        max_depth=int(cfg["max_depth"]),
        min_samples_leaf=int(cfg["min_samples_leaf"]),
        features_per_split=cfg["features_per_split"],
        seed=int(cfg["seed"]),
        bootstrap=bool(cfg["bootstrap"]),
    )
    flats = tuple(
        FlatTree(
            feature=np.array(t["feature"], dtype=np.int32),
            threshold=np.array(t["threshold"], dtype=np.float64),
            left=np.array(t["left"], dtype=np.int32),
            right=np.array(t["right"], dtype=np.int32),
            value=np.array(t["value"], dtype=np.float64),
        )
        for t in doc["trees"]
    )
    return ForestModel(
        target_sensor=int(doc["target_sensor"]),
        feature_ids=tuple(int(i) for i in doc["feature_ids"]),
        trees=tuple(unflatten_tree(flat) for flat in flats),
        config=config,
        flat_trees=flats,
    )


def save_artifact(artifact: ModelArtifact, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(artifact.to_json_dict(), fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_artifact(path, catalog: SensorCatalog | None = None) -> ModelArtifact:
    """Read an artifact; when a catalog is given, verify its fingerprint."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ArtifactFormatError(f"artifact file {path}: {exc}") from exc
    artifact = ModelArtifact.from_json_dict(doc)
    if catalog is not None:
        expected = catalog.fingerprint()
        if artifact.catalog_fingerprint != expected:
            raise FingerprintMismatchError(
                "artifact was fitted against a different catalog: "
                f"artifact fingerprint {artifact.catalog_fingerprint}, "
                f"supplied catalog fingerprint {expected}"
            )
    return artifact


def build_pipeline(
    artifact: ModelArtifact,
    catalog: SensorCatalog,
    alert_threshold: HealthIndex = HealthIndex.ALMOST_DEFECTIVE,
) -> MonitorPipeline:
    """Assemble a monitoring pipeline from a verified artifact."""
    expected = catalog.fingerprint()
    if artifact.catalog_fingerprint != expected:
        raise FingerprintMismatchError(
            "artifact was fitted against a different catalog: "
            f"artifact fingerprint {artifact.catalog_fingerprint}, "
            f"supplied catalog fingerprint {expected}"
        )
    return MonitorPipeline(
        catalog=catalog,
        normalizer=artifact.normalizer,
        autoencoder=artifact.autoencoder,
        profile=artifact.profile,
        bank=artifact.bank,
        alert_threshold=alert_threshold,
    )
