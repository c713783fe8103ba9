"""Sensor catalog, telemetry containers, and the health vocabulary.

Everything downstream (preprocessing, models, monitoring) is expressed
against these types. All of them are immutable after construction and
safe to share across threads; ``Dataset`` freezes its numpy buffers.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ArtifactFormatError, UnknownSensorError

N_SENSORS = 20


class SensorKind(str, Enum):
    """Continuous physical quantity vs a discrete 0/1 state channel."""

    CONTINUOUS = "continuous"
    DISCRETE_STATE = "discrete-state"


class HealthIndex(IntEnum):
    """Five-class sensor status, ordered from best to worst."""

    HEALTHY = 0
    ALMOST_HEALTHY = 1
    NORMAL = 2
    ALMOST_DEFECTIVE = 3
    DEFECTIVE = 4

    @property
    def label(self) -> str:
        return _HEALTH_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "HealthIndex":
        for idx, name in _HEALTH_LABELS.items():
            if name == label:
                return idx
        raise ValueError(f"unknown health label: {label!r}")


_HEALTH_LABELS = {
    HealthIndex.HEALTHY: "healthy",
    HealthIndex.ALMOST_HEALTHY: "almost-healthy",
    HealthIndex.NORMAL: "normal",
    HealthIndex.ALMOST_DEFECTIVE: "almost-defective",
    HealthIndex.DEFECTIVE: "defective",
}


@dataclass(frozen=True)
class SensorSpec:
    """One monitored channel with its physical operating bounds.

    Bounds are configuration used for cleansing and synthetic generation,
    not measured ground truth; override them via a catalog file if the
    target vehicle differs.
    """

    id: int
    name: str
    unit: str
    physical_min: float
    physical_max: float
    kind: SensorKind = SensorKind.CONTINUOUS

    def __post_init__(self) -> None:
        if self.kind is SensorKind.CONTINUOUS and not self.physical_min < self.physical_max:
            raise ValueError(f"sensor {self.name!r}: physical_min must be < physical_max")
        if self.physical_min > self.physical_max:
            raise ValueError(f"sensor {self.name!r}: physical_min must be <= physical_max")


@dataclass(frozen=True)
class SensorCatalog:
    """Ordered list of the 20 monitored ECU channels."""

    sensors: tuple[SensorSpec, ...]

    def __post_init__(self) -> None:
        if len(self.sensors) != N_SENSORS:
            raise ValueError(f"catalog must list exactly {N_SENSORS} sensors, got {len(self.sensors)}")
        ids = [s.id for s in self.sensors]
        if ids != list(range(N_SENSORS)):
            raise ValueError("sensor ids must be 0..19 in order with no gaps")
        names = [s.name for s in self.sensors]
        if len(set(names)) != len(names):
            raise ValueError("sensor names must be unique")

    def __len__(self) -> int:
        return len(self.sensors)

    def __iter__(self) -> Iterator[SensorSpec]:
        return iter(self.sensors)

    def __getitem__(self, sensor_id: int) -> SensorSpec:
        return self.sensors[sensor_id]

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.sensors]

    def id_of(self, name: str) -> int:
        for s in self.sensors:
            if s.name == name:
                return s.id
        raise UnknownSensorError(f"no sensor named {name!r} in catalog")

    def to_json_dict(self) -> dict:
        return {
            "sensors": [
                {
                    "id": s.id,
                    "name": s.name,
                    "unit": s.unit,
                    "physical_min": s.physical_min,
                    "physical_max": s.physical_max,
                    "kind": s.kind.value,
                }
                for s in self.sensors
            ]
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SensorCatalog":
        try:
            specs = tuple(
                SensorSpec(
                    id=int(entry["id"]),
                    name=str(entry["name"]),
                    unit=str(entry["unit"]),
                    physical_min=float(entry["physical_min"]),
                    physical_max=float(entry["physical_max"]),
                    kind=SensorKind(entry.get("kind", "continuous")),
                )
                for entry in doc["sensors"]
            )
            return cls(specs)
        except (KeyError, TypeError, ValueError) as exc:
            raise ArtifactFormatError(f"invalid catalog document: {exc}") from exc

    def fingerprint(self) -> str:
        """SHA-256 over the canonical catalog serialization.

        Used to bind fitted model artifacts to the exact catalog they
        were trained against.
        """
        canonical = json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def default_catalog() -> SensorCatalog:
    """The 20-channel catalog monitored on the reference vehicle.

    Physical ranges are plausible bounds chosen for cleansing and
    synthetic generation (engine speed 0..8000 rpm, battery 6..16 V,
    oxygen probes 0..1 V, 0/1 state channels); they are overridable
    via a catalog file.
    """
    c = SensorKind.CONTINUOUS
    d = SensorKind.DISCRETE_STATE
    rows = [
        ("manifold_air_temperature", "degC", -40.0, 150.0, c),
        ("manifold_pressure", "kPa", 10.0, 255.0, c),
        ("stepper_rotation_rate", "step", 0.0, 250.0, c),
        ("engine_speed", "rpm", 0.0, 8000.0, c),
        ("throttle_position_voltage", "V", 0.0, 5.0, c),
        ("fuel_injection_time", "ms", 0.0, 25.0, c),
        ("throttle_position", "%", 0.0, 100.0, c),
        ("engine_water_temperature", "degC", -40.0, 140.0, c),
        ("coil_charging_time", "ms", 0.0, 12.0, c),
        ("battery_voltage", "V", 6.0, 16.0, c),
        ("vehicle_condition", "state", 0.0, 1.0, d),
        ("upstream_oxygen_voltage", "V", 0.0, 1.0, c),
        ("downstream_oxygen_voltage", "V", 0.0, 1.0, c),
        ("vehicle_speed", "km/h", 0.0, 240.0, c),
        ("engine_load", "%", 0.0, 100.0, c),
        ("canister_purge", "%", 0.0, 100.0, c),
        ("fan_status", "state", 0.0, 1.0, d),
        ("ignition_advance_angle", "deg", -10.0, 60.0, c),
        ("move", "state", 0.0, 1.0, d),
        ("strike", "state", 0.0, 1.0, d),
    ]
    return SensorCatalog(
        tuple(
            SensorSpec(id=i, name=name, unit=unit, physical_min=lo, physical_max=hi, kind=kind)
            for i, (name, unit, lo, hi, kind) in enumerate(rows)
        )
    )


@dataclass(frozen=True)
class SensorFrame:
    """One timestamped vector of readings in raw physical units."""

    timestamp_ms: int
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class FrameViolation:
    """One invariant violation found in a frame; violations are data, not failures."""

    kind: str  # "length" | "non_finite" | "out_of_range"
    message: str
    sensor_id: int | None = None


def validate_frame(frame: SensorFrame, catalog: SensorCatalog) -> list[FrameViolation]:
    """Check a frame against every catalog invariant.

    Returns an empty list when the frame is well formed; otherwise one
    entry per violation (length mismatch, non-finite value, value outside
    the sensor's physical range).
    """
    violations: list[FrameViolation] = []
    values = np.asarray(frame.values, dtype=np.float64)
    if values.shape != (len(catalog),):
        violations.append(
            FrameViolation(
                kind="length",
                message=f"expected {len(catalog)} values, got {values.shape}",
            )
        )
        return violations
    for spec in catalog:
        v = values[spec.id]
        if not math.isfinite(v):
            violations.append(
                FrameViolation(
                    kind="non_finite",
                    message=f"{spec.name}: value {v} is not finite",
                    sensor_id=spec.id,
                )
            )
        elif not spec.physical_min <= v <= spec.physical_max:
            violations.append(
                FrameViolation(
                    kind="out_of_range",
                    message=(
                        f"{spec.name}: value {v} outside "
                        f"[{spec.physical_min}, {spec.physical_max}] {spec.unit}"
                    ),
                    sensor_id=spec.id,
                )
            )
    return violations


class Dataset:
    """A catalog plus an ordered matrix of frames.

    Values may contain non-finite or out-of-range entries before
    cleansing; timestamps must be non-decreasing. Buffers are frozen at
    construction.
    """

    def __init__(self, catalog: SensorCatalog, timestamps_ms, values) -> None:
        ts = np.array(timestamps_ms, dtype=np.int64)
        vals = np.array(values, dtype=np.float64)
        if vals.ndim != 2 or vals.shape[1] != len(catalog):
            raise ValueError(f"values must have shape (n, {len(catalog)}), got {vals.shape}")
        if ts.shape != (vals.shape[0],):
            raise ValueError("timestamps and values row counts differ")
        if ts.size > 1 and np.any(np.diff(ts) < 0):
            raise ValueError("timestamps must be non-decreasing")
        ts.flags.writeable = False
        vals.flags.writeable = False
        self.catalog = catalog
        self.timestamps_ms = ts
        self.values = vals

    @classmethod
    def from_frames(cls, catalog: SensorCatalog, frames: Iterable[SensorFrame]) -> "Dataset":
        frames = list(frames)
        ts = [f.timestamp_ms for f in frames]
        if frames:
            vals = np.stack([f.values for f in frames])
        else:
            vals = np.empty((0, len(catalog)))
        return cls(catalog, ts, vals)

    def __len__(self) -> int:
        return self.values.shape[0]

    def __iter__(self) -> Iterator[SensorFrame]:
        return (self.frame(i) for i in range(len(self)))

    def frame(self, i: int) -> SensorFrame:
        return SensorFrame(timestamp_ms=int(self.timestamps_ms[i]), values=self.values[i])

    def subset(self, indices: Sequence[int]) -> "Dataset":
        """Rows at ``indices`` sorted into timestamp order."""
        idx = np.sort(np.asarray(indices, dtype=np.intp))
        return Dataset(self.catalog, self.timestamps_ms[idx], self.values[idx])

    def with_values(self, values: np.ndarray) -> "Dataset":
        """Same catalog and timestamps, replaced value matrix."""
        return Dataset(self.catalog, self.timestamps_ms, values)


@dataclass(frozen=True)
class SplitDataset:
    """Disjoint train/validation/test partition of one cleansed dataset."""

    train: Dataset
    validation: Dataset
    test: Dataset


def as_matrix(data) -> np.ndarray:
    """Coerce a Dataset, SensorFrame, or array-like to a float64 matrix/vector."""
    if isinstance(data, Dataset):
        return data.values
    if isinstance(data, SensorFrame):
        return data.values
    return np.asarray(data, dtype=np.float64)


@dataclass(frozen=True)
class SensorHealth:
    """Per-sensor entry of a monitor report.

    ``raw_value`` and ``reconstructed_value`` are in raw physical units;
    ``residual`` is the absolute difference in normalized space and
    ``z_band`` its distance from the calibrated residual mean in units
    of the calibrated standard deviation. ``substituted_value`` (raw
    units) is present exactly when ``health`` is DEFECTIVE.
    """

    sensor_id: int
    name: str
    raw_value: float
    reconstructed_value: float
    residual: float
    z_band: float
    health: HealthIndex
    substituted_value: float | None = None


@dataclass(frozen=True)
class Alert:
    """One alert record emitted for a sensor at or above the alert threshold."""

    sensor_id: int
    name: str
    health: HealthIndex
    message: str


@dataclass(frozen=True)
class MonitorReport:
    """Full health assessment of one frame."""

    timestamp_ms: int
    sensors: tuple[SensorHealth, ...]
    alerts: tuple[Alert, ...] = field(default_factory=tuple)

    def to_json_dict(self) -> dict:
        return {
            "timestamp_ms": self.timestamp_ms,
            "sensors": [
                {
                    "sensor_id": s.sensor_id,
                    "name": s.name,
                    "raw_value": s.raw_value,
                    "reconstructed_value": s.reconstructed_value,
                    "residual": s.residual,
                    "z_band": s.z_band,
                    "health": s.health.label,
                    "substituted_value": s.substituted_value,
                }
                for s in self.sensors
            ],
            "alerts": [
                {
                    "sensor_id": a.sensor_id,
                    "name": a.name,
                    "health": a.health.label,
                    "message": a.message,
                }
                for a in self.alerts
            ],
        }


# --- telemetry CSV ---------------------------------------------------------

TIMESTAMP_COLUMN = "timestamp_ms"


def write_telemetry_csv(dataset: Dataset, path_or_file) -> None:
    """Write the standard telemetry CSV: timestamp column then the 20 channels."""

    def _write(fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([TIMESTAMP_COLUMN, *dataset.catalog.names])
        for i in range(len(dataset)):
            writer.writerow(
                [int(dataset.timestamps_ms[i])] + [repr(float(v)) for v in dataset.values[i]]
            )

    if isinstance(path_or_file, (str,)) or hasattr(path_or_file, "__fspath__"):
        with open(path_or_file, "w", encoding="utf-8", newline="") as fh:
            _write(fh)
    else:
        _write(path_or_file)


def read_telemetry_csv(path_or_file, catalog: SensorCatalog) -> Dataset:
    """Read a telemetry CSV back into a Dataset, validating the header."""

    def _read(fh) -> Dataset:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ArtifactFormatError("telemetry CSV is empty") from None
        expected = [TIMESTAMP_COLUMN, *catalog.names]
        if header != expected:
            raise ArtifactFormatError(
                f"telemetry header does not match catalog: got {header[:3]}..., "
                f"expected {expected[:3]}..."
            )
        timestamps: list[int] = []
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise ArtifactFormatError(f"line {lineno}: expected {len(expected)} columns, got {len(row)}")
            try:
                timestamps.append(int(row[0]))
                rows.append([float(x) for x in row[1:]])
            except ValueError as exc:
                raise ArtifactFormatError(f"line {lineno}: {exc}") from exc
        values = np.array(rows, dtype=np.float64) if rows else np.empty((0, len(catalog)))
        try:
            return Dataset(catalog, timestamps, values)
        except ValueError as exc:
            raise ArtifactFormatError(str(exc)) from exc

    if isinstance(path_or_file, str) or hasattr(path_or_file, "__fspath__"):
        with open(path_or_file, "r", encoding="utf-8", newline="") as fh:
            return _read(fh)
    if isinstance(path_or_file, bytes):
        return _read(io.StringIO(path_or_file.decode("utf-8")))
    return _read(path_or_file)


def load_catalog(path) -> SensorCatalog:
    """Load a catalog from its JSON key-value document."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ArtifactFormatError(f"catalog file {path}: {exc}") from exc
    return SensorCatalog.from_json_dict(doc)


def save_catalog(catalog: SensorCatalog, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(catalog.to_json_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")
