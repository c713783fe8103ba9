"""Frame-by-frame health monitoring: reconstruct, classify, substitute, alert.

A pipeline bundles the fitted components (normalizer, autoencoder,
residual profile, forest bank) against one catalog. Processing a frame
is a pure function of (pipeline, frame): normalize, reconstruct, band
each sensor's residual, replace DEFECTIVE readings with their forest
estimate, and emit alerts at or above the configured threshold.

Out-of-range raw values are accepted here on purpose: they are exactly
what faults look like. Only structural defects (wrong length, NaN)
reject a frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

import numpy as np

from .autoencoder import AutoencoderModel, forward
from .calibration import ResidualProfile, classify_batch, z_distance
from .domain import (
    Alert,
    FrameViolation,
    HealthIndex,
    MonitorReport,
    SensorCatalog,
    SensorFrame,
    SensorHealth,
)
from .errors import StructuralViolationError
from .forest import ForestBank, predict
from .preprocessing import NormalizationParams, denormalize, denormalize_matrix, normalize


@dataclass(frozen=True)
class MonitorPipeline:
    """Immutable assembly of all fitted components for one catalog."""

    catalog: SensorCatalog
    normalizer: NormalizationParams
    autoencoder: AutoencoderModel
    profile: ResidualProfile
    bank: ForestBank
    alert_threshold: HealthIndex = HealthIndex.ALMOST_DEFECTIVE


@dataclass(frozen=True)
class StreamError:
    """A rejected frame in a stream; processing continues past it."""

    timestamp_ms: int
    violations: tuple[FrameViolation, ...]

    def to_json_dict(self) -> dict:
        return {
            "timestamp_ms": self.timestamp_ms,
            "error": "structural_violation",
            "violations": [
                {"sensor_id": v.sensor_id, "kind": v.kind, "message": v.message}
                for v in self.violations
            ],
        }


def _structural_violations(frame: SensorFrame, catalog: SensorCatalog) -> list[FrameViolation]:
    values = np.asarray(frame.values, dtype=np.float64)
    if values.shape != (len(catalog),):
        return [
            FrameViolation(
                kind="length",
                message=f"expected {len(catalog)} values, got {values.shape}",
            )
        ]
    return [
        FrameViolation(
            kind="non_finite",
            message=f"{catalog[s].name}: value {values[s]} is not finite",
            sensor_id=int(s),
        )
        for s in np.flatnonzero(~np.isfinite(values))
    ]


def process_frame(pipeline: MonitorPipeline, frame: SensorFrame) -> MonitorReport:
    """Assess one raw frame and substitute any DEFECTIVE readings."""
    violations = _structural_violations(frame, pipeline.catalog)
    if violations:
        raise StructuralViolationError(violations)

    normalized = normalize(frame.values, pipeline.normalizer)
    reconstruction = forward(pipeline.autoencoder, normalized)
    resid = np.abs(normalized - reconstruction)
    bands = classify_batch(resid, pipeline.profile.mean, pipeline.profile.std)
    recon_raw = denormalize_matrix(reconstruction, pipeline.normalizer)

    sensors = []
    alerts = []
    for spec in pipeline.catalog:
        s = spec.id
        health = HealthIndex(int(bands[s]))
        substituted = None
        if health is HealthIndex.DEFECTIVE:
            estimate = predict(pipeline.bank[s], normalized)
            substituted = denormalize(estimate, s, pipeline.normalizer)
        z = z_distance(float(resid[s]), float(pipeline.profile.mean[s]), float(pipeline.profile.std[s]))
        sensors.append(
            SensorHealth(
                sensor_id=s,
                name=spec.name,
                raw_value=float(frame.values[s]),
                reconstructed_value=float(recon_raw[s]),
                residual=float(resid[s]),
                z_band=z,
                health=health,
                substituted_value=substituted,
            )
        )
        if health >= pipeline.alert_threshold:
            message = f"{spec.name}: health {health.label} (z={_fmt_z(z)})"
            if substituted is not None:
                message += f"; reading replaced with estimate {substituted:.6g} {spec.unit}"
            alerts.append(Alert(sensor_id=s, name=spec.name, health=health, message=message))

    return MonitorReport(
        timestamp_ms=frame.timestamp_ms,
        sensors=tuple(sensors),
        alerts=tuple(alerts),
    )


def _fmt_z(z: float) -> str:
    return "inf" if math.isinf(z) else f"{z:.2f}"


def process_stream(
    pipeline: MonitorPipeline, frames: Iterable[SensorFrame]
) -> Iterator[Union[MonitorReport, StreamError]]:
    """Map ``process_frame`` over a frame source without halting on bad frames.

    Yields one record per input frame, in order: a MonitorReport for
    accepted frames, a StreamError for structurally invalid ones.
    """
    for frame in frames:
        try:
            yield process_frame(pipeline, frame)
        except StructuralViolationError as exc:
            yield StreamError(
                timestamp_ms=frame.timestamp_ms,
                violations=tuple(exc.violations),
            )
