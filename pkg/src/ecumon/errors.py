"""Exception hierarchy for the monitoring engine.

``DataError`` subclasses mark problems a caller can fix by supplying
different data or configuration; the CLI maps them to exit code 2.
Anything else escaping a command is treated as an internal error.
"""

from __future__ import annotations


class EcuMonError(Exception):
    """Base class for all package-specific errors."""


class DataError(EcuMonError):
    """Invalid or unusable input data, file, or configuration."""


class TooFewFramesError(DataError):
    """Dataset has too few frames to split."""


class EmptyDatasetError(DataError):
    """Operation requires a non-empty dataset."""


class EmptyBatchError(DataError):
    """Loss/gradient evaluation requires a non-empty batch."""


class EmptySamplesError(DataError):
    """Tree fitting requires at least one sample."""


class TooFewSamplesError(DataError):
    """Residual profile needs at least two frames per sensor."""


class DimensionMismatchError(DataError):
    """Input vector width does not match the model's input width."""


class DivergedLossError(DataError):
    """Training loss became non-finite (typically a too-large learning rate)."""


class ConstantTargetError(DataError):
    """Coefficient of determination is undefined for a zero-variance target."""


class NegativeResidualError(DataError):
    """Residuals are absolute differences and must be nonnegative."""


class InvalidKError(DataError):
    """Requested peer-feature count is outside the valid range."""


class UnknownSensorError(DataError):
    """Sensor id or name not present in the catalog."""


class LengthMismatchError(DataError):
    """Two sequences that must cover identical frames have different lengths."""


class StructuralViolationError(DataError):
    """Frame failed structural validation (wrong length or non-finite values)."""

    def __init__(self, violations):
        self.violations = list(violations)
        detail = "; ".join(v.message for v in self.violations)
        super().__init__(f"frame rejected: {detail}")


class FingerprintMismatchError(DataError):
    """Artifact was fitted against a different catalog."""


class ArtifactFormatError(DataError):
    """Model artifact or configuration document is malformed or unsupported."""
