"""Per-sensor Gaussian residual statistics and five-band health classification.

Residuals are absolute reconstruction errors on normalized values. Each
sensor gets a (mean, std) profile fitted on validation data only; a new
residual is classified by its distance from the mean in std units:

    z < 1       healthy
    1 <= z < 2  almost healthy
    2 <= z < 3  normal
    3 <= z < 4  almost defective
    z >= 4      defective

Bands are two-sided in z and lower-inclusive at the boundaries, so the
five classes partition [0, inf). A zero-std profile degenerates to:
exact match of the mean is healthy, anything else defective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autoencoder import AutoencoderModel, forward
from .domain import HealthIndex, as_matrix
from .errors import NegativeResidualError, TooFewSamplesError

_BAND_EDGES = (1.0, 2.0, 3.0, 4.0)


@dataclass(frozen=True)
class ResidualProfile:
    """Per-sensor mean and standard deviation of validation residuals."""

    mean: np.ndarray
    std: np.ndarray
    n_samples: int

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64)
        std = np.asarray(self.std, dtype=np.float64)
        if mean.shape != std.shape or mean.ndim != 1:
            raise ValueError("mean and std must be equal-length vectors")
        if self.n_samples < 2:
            raise ValueError("profile requires at least 2 samples")
        if np.any(mean < 0) or np.any(std < 0):
            raise ValueError("mean and std of absolute residuals must be nonnegative")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(std))):
            raise ValueError("profile statistics must be finite")
        mean.flags.writeable = False
        std.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)


def residuals(model: AutoencoderModel, data) -> np.ndarray:
    """Per-frame, per-sensor absolute difference between input and reconstruction."""
    x = np.atleast_2d(as_matrix(data))
    return np.abs(x - forward(model, x))


def fit_profile(residual_matrix) -> ResidualProfile:
    """Sample mean and sample standard deviation (n-1 denominator) per sensor."""
    e = np.atleast_2d(np.asarray(residual_matrix, dtype=np.float64))
    if e.shape[0] < 2:
        raise TooFewSamplesError(f"need >= 2 frames of residuals, got {e.shape[0]}")
    return ResidualProfile(
        mean=e.mean(axis=0),
        std=e.std(axis=0, ddof=1),
        n_samples=e.shape[0],
    )


def z_distance(residual: float, mean: float, std: float) -> float:
    """Distance from the profile mean in std units; inf when std is 0 and off-mean."""
    if std > 0:
        return abs(residual - mean) / std
    return 0.0 if residual == mean else float("inf")


def classify(residual: float, mean: float, std: float) -> HealthIndex:
    """Map one residual to its health band."""
    if residual < 0:
        raise NegativeResidualError(f"residual must be >= 0, got {residual}")
    z = z_distance(residual, mean, std)
    for band, edge in enumerate(_BAND_EDGES):
        if z < edge:
            return HealthIndex(band)
    return HealthIndex.DEFECTIVE


def classify_batch(residual_matrix, mean, std) -> np.ndarray:
    """Vectorized ``classify`` over an array of residuals.

    ``mean``/``std`` broadcast against the residual array. Returns an
    integer array of HealthIndex values.
    """
    e = np.asarray(residual_matrix, dtype=np.float64)
    if np.any(e < 0):
        raise NegativeResidualError("residuals must be >= 0")
    mean = np.asarray(mean, dtype=np.float64)
    std = np.asarray(std, dtype=np.float64)
    safe_std = np.where(std > 0, std, 1.0)
    z = np.abs(e - mean) / safe_std
    bands = np.minimum(np.floor(z), len(_BAND_EDGES)).astype(np.int64)
    degenerate = np.broadcast_to(std == 0, bands.shape)
    exact = e == np.broadcast_to(mean, bands.shape)
    bands = np.where(
        degenerate,
        np.where(exact, int(HealthIndex.HEALTHY), int(HealthIndex.DEFECTIVE)),
        bands,
    )
    return bands
