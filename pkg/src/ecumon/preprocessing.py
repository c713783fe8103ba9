"""Split, cleanse, and normalize raw telemetry into model-ready form.

The split is uniformly random (seeded) rather than chronological because
the downstream models are frame-wise. Cleansing drops rows only; no
imputation, and no statistical outlier removal, which would silently
delete exactly the faults the detector must learn to flag. Normalized
values are never clipped, so faulty readings can land outside [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import Dataset, SensorFrame, SplitDataset, as_matrix
from .errors import EmptyDatasetError, TooFewFramesError

TEST_FRACTION = 0.33
VALIDATION_FRACTION = 0.25  # of the non-test remainder
MIN_SPLIT_FRAMES = 10


@dataclass(frozen=True)
class CleansingReport:
    """Row accounting for one cleansing pass."""

    rows_in: int
    rows_dropped_nonfinite: int
    rows_dropped_out_of_range: int

    @property
    def rows_out(self) -> int:
        return self.rows_in - self.rows_dropped_nonfinite - self.rows_dropped_out_of_range


@dataclass(frozen=True)
class NormalizationParams:
    """Per-sensor min/max fitted on the training part only."""

    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self) -> None:
        lo = np.asarray(self.minimum, dtype=np.float64)
        hi = np.asarray(self.maximum, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("minimum/maximum must be equal-length vectors")
        if np.any(lo > hi):
            raise ValueError("minimum must be <= maximum for every sensor")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "minimum", lo)
        object.__setattr__(self, "maximum", hi)

    @property
    def span(self) -> np.ndarray:
        return self.maximum - self.minimum


def split(dataset: Dataset, seed: int) -> SplitDataset:
    """Seeded uniform partition into test (33%) and train/validation (25% of the rest).

    Counts are rounded to the nearest frame; each part keeps its frames
    in timestamp order. Deterministic for a fixed seed.
    """
    n = len(dataset)
    if n < MIN_SPLIT_FRAMES:
        raise TooFewFramesError(f"need at least {MIN_SPLIT_FRAMES} frames to split, got {n}")
    n_test = round(n * TEST_FRACTION)
    n_val = round((n - n_test) * VALIDATION_FRACTION)
    perm = np.random.default_rng(seed).permutation(n)
    return SplitDataset(
        train=dataset.subset(perm[n_test + n_val:]),
        validation=dataset.subset(perm[n_test:n_test + n_val]),
        test=dataset.subset(perm[:n_test]),
    )


def cleanse(dataset: Dataset) -> tuple[Dataset, CleansingReport]:
    """Drop frames containing non-finite values or out-of-physical-range values.

    Surviving frames are never modified. A frame with both defects
    counts once, as non-finite. Idempotent.
    """
    values = dataset.values
    nonfinite = ~np.all(np.isfinite(values), axis=1)
    lo = np.array([s.physical_min for s in dataset.catalog])
    hi = np.array([s.physical_max for s in dataset.catalog])
    with np.errstate(invalid="ignore"):
        out_of_range = np.any((values < lo) | (values > hi), axis=1) & ~nonfinite
    keep = ~(nonfinite | out_of_range)
    report = CleansingReport(
        rows_in=len(dataset),
        rows_dropped_nonfinite=int(nonfinite.sum()),
        rows_dropped_out_of_range=int(out_of_range.sum()),
    )
    return dataset.subset(np.flatnonzero(keep)), report


def fit_normalizer(train: Dataset) -> NormalizationParams:
    """Per-sensor min/max over training frames; constant sensors get max = min.

    Fit exclusively on the training part so validation and test frames
    never leak into the scaling.
    """
    if len(train) == 0:
        raise EmptyDatasetError("cannot fit normalizer on an empty dataset")
    return NormalizationParams(
        minimum=train.values.min(axis=0),
        maximum=train.values.max(axis=0),
    )


def normalize(data, params: NormalizationParams):
    """Map values to (x - min) / (max - min) per sensor; constant sensors map to 0.

    Accepts a Dataset, SensorFrame, or array and returns the same shape.
    Values outside the training range are NOT clipped: out-of-range
    output is exactly what a faulty sensor looks like downstream.
    """
    span = params.span
    safe_span = np.where(span > 0, span, 1.0)
    x = as_matrix(data)
    normalized = np.where(span > 0, (x - params.minimum) / safe_span, 0.0)
    if isinstance(data, Dataset):
        return data.with_values(normalized)
    if isinstance(data, SensorFrame):
        return SensorFrame(timestamp_ms=data.timestamp_ms, values=normalized)
    return normalized


def denormalize(value: float, sensor_id: int, params: NormalizationParams) -> float:
    """Exact inverse of normalize for one sensor; constant sensors return min."""
    span = float(params.span[sensor_id])
    if span == 0.0:
        return float(params.minimum[sensor_id])
    return float(params.minimum[sensor_id]) + float(value) * span


def denormalize_matrix(normalized, params: NormalizationParams) -> np.ndarray:
    """Vectorized inverse of normalize over full frames."""
    x = as_matrix(normalized)
    return np.where(params.span > 0, params.minimum + x * params.span, params.minimum)
