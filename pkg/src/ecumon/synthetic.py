"""Correlated 20-channel telemetry generation and fault injection.

A handful of latent processes drive the vehicle: driver demand (seeded
random walk toward piecewise-constant setpoints, mixing idle and
driving segments), thermal state (slow relaxation toward a
demand-dependent equilibrium), electrical state (relaxation with a mild
demand coupling), three oscillation phases (exhaust-mixture and purge
cycling), road grade, and ambient temperature.

Every channel is a fixed, documented function of these latents:

    manifold_air_temperature  = 14 + 40*thermal + 8*demand + 2.2*ambient
    manifold_pressure         = 28 + 70*demand + 1.5*ambient
    stepper_rotation_rate     = 190 - 130*demand
    engine_speed              = 850 + 4600*demand - 140*grade*demand
    throttle_position_voltage = 0.45 + 3.9*demand
    fuel_injection_time       = 1.8 + 11.5*demand + 0.38*grade
    throttle_position         = 3 + 92*demand
    engine_water_temperature  = -15 + 125*thermal + 2*ambient
    coil_charging_time        = 4.3 - 2.6*electrical
    battery_voltage           = 11.0 + 4.0*electrical
    vehicle_condition         = demand > 0.065
    upstream_oxygen_voltage   = 0.45 + 0.22*sin(p1) + 0.06*sin(p2) + 0.12*demand
    downstream_oxygen_voltage = 0.50 + 0.22*sin(p1 - 1.2) + 0.05*sin(p2 - 0.7) + 0.12*demand
    vehicle_speed             = 165*demand^1.15 - 7.5*grade*demand
    engine_load               = 10 + 78*demand + 6*thermal + 4.5*grade
    canister_purge            = 15 + 70*demand + 2.2*sin(p2 + 1) + 2*sin(p3)
    fan_status                = thermal > 0.81
    ignition_advance_angle    = 40 - 20*demand - 6*thermal - 1.2*grade + 0.6*sin(p3 - 0.9)
    move                      = vehicle_speed (pre-noise) > 8.5
    strike                    = demand > 0.62

Each continuous channel additionally carries a slow bounded
sensor-wander oscillation (independent jittered phase per channel,
amplitude about 15% of the channel's operating spread) and independent
Gaussian noise (per-channel base scale times the scenario
``noise_scale``), clipped to the physical range. The wander gives every
channel a component its peers cannot explain, so reconstruction
residuals keep a bounded dominant term and well-behaved tails; the 0/1
state channels are deterministic latent thresholds.

Faults overwrite the affected sensor inside their window from a
dedicated random stream, so the rest of the dataset is bit-identical to
the clean generation under the same seed; ground truth keeps the
pre-fault values and per-cell fault flags.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .domain import Dataset, MonitorReport, SensorCatalog
from .errors import ArtifactFormatError, LengthMismatchError, UnknownSensorError

# per-channel additive Gaussian noise at noise_scale = 1, raw units
# (roughly 4% of each channel's operating signal spread)
_BASE_NOISE = np.array([
    0.12, 0.4, 0.75, 26.0, 0.022, 0.065, 0.5, 0.26, 0.0055, 0.0085,
    0.0, 0.012, 0.01, 0.95, 0.46, 0.4, 0.0, 0.12, 0.0, 0.0,
])

# per-channel sensor-wander amplitude, raw units (about 15% of the operating
# signal spread); a slow bounded oscillation individual to each channel, so
# peers can never explain it away
_WANDER_AMP = np.array([
    0.95, 3.0, 5.6, 199.0, 0.17, 0.50, 4.0, 2.0, 0.042, 0.065,
    0.0, 0.12, 0.10, 7.0, 3.45, 3.0, 0.0, 0.95, 0.0, 0.0,
])
_WANDER_RATE = 0.05 + 0.017 * np.arange(20)  # phase advance per frame


class FaultKind(str, Enum):
    STUCK_AT = "stuck_at"
    OFFSET = "offset"
    DRIFT = "drift"
    NOISE_BURST = "noise_burst"
    DROPOUT = "dropout"


_REQUIRED_PARAM = {
    FaultKind.STUCK_AT: "value",
    FaultKind.OFFSET: "delta",
    FaultKind.DRIFT: "rate",
    FaultKind.NOISE_BURST: "scale",
    FaultKind.DROPOUT: None,
}


@dataclass(frozen=True)
class FaultSpec:
    """One injected fault: what, where, and for how long.

    Magnitudes (value/delta/rate/scale) are in raw physical units. The
    window [start_frame, end_frame] is inclusive.
    """

    sensor_id: int
    kind: FaultKind
    start_frame: int
    end_frame: int
    value: float | None = None  # stuck_at
    delta: float | None = None  # offset
    rate: float | None = None  # drift, per frame
    scale: float | None = None  # noise_burst

    def __post_init__(self) -> None:
        if self.start_frame < 0 or self.start_frame > self.end_frame:
            raise ValueError("fault window must satisfy 0 <= start_frame <= end_frame")
        needed = _REQUIRED_PARAM[self.kind]
        if needed is not None and getattr(self, needed) is None:
            raise ValueError(f"{self.kind.value} fault requires parameter {needed!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    """Deterministic recipe for one synthetic drive."""

    n_frames: int
    seed: int = 0
    noise_scale: float = 1.0
    period_ms: int = 1000
    start_timestamp_ms: int = 0
    faults: tuple[FaultSpec, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.n_frames < 1:
            raise ValueError("n_frames must be >= 1")
        if not (math.isfinite(self.noise_scale) and self.noise_scale >= 0):
            raise ValueError("noise_scale must be finite and >= 0")
        if self.period_ms < 1:
            raise ValueError("period_ms must be >= 1")
        for fault in self.faults:
            if fault.end_frame >= self.n_frames:
                raise ValueError(
                    f"fault on sensor {fault.sensor_id} ends at frame {fault.end_frame}, "
                    f"but the scenario has only {self.n_frames} frames"
                )
        object.__setattr__(self, "faults", tuple(self.faults))


@dataclass(frozen=True)
class GroundTruth:
    """Pre-fault values and per-cell fault flags, aligned with the dataset."""

    timestamps_ms: np.ndarray
    true_values: np.ndarray  # (n, 20) raw units
    fault_flags: np.ndarray  # (n, 20) bool

    def __post_init__(self) -> None:
        for name in ("timestamps_ms", "true_values", "fault_flags"):
            arr = getattr(self, name)
            arr.flags.writeable = False


def _simulate_latents(n: int, rng: np.random.Generator):
    """Run the latent drivers forward for n frames."""
    # driving profile: piecewise-constant demand setpoints drawn from three
    # bands (idle, city, highway); the gaps between bands give the 0/1 state
    # channels real switching margins
    setpoint = np.empty(n)
    filled = 0
    while filled < n:
        length = int(rng.integers(500, 1500))
        kind = rng.random()
        if kind < 0.25:
            target = rng.uniform(0.005, 0.02)  # idle / crawling
        elif kind < 0.70:
            target = rng.uniform(0.12, 0.48)  # city
        else:
            target = rng.uniform(0.74, 0.95)  # highway
        setpoint[filled:filled + length] = target
        filled += length

    eps_d = rng.standard_normal(n)
    # warm start: thermal and electrical states begin near their equilibria
    # for the opening segment, so the drive has no out-of-distribution burn-in
    th0 = min(max(0.55 + 0.42 * setpoint[0] + rng.uniform(-0.08, 0.08), 0.0), 1.0)
    eps_th = rng.standard_normal(n)
    eps_el = rng.standard_normal(n)
    eps_p = rng.standard_normal(n)
    eps_p2 = rng.standard_normal(n)
    eps_p3 = rng.standard_normal(n)
    eps_grade = rng.standard_normal(n)
    eps_amb = rng.standard_normal(n)

    d = np.empty(n)
    th = np.empty(n)
    el = np.empty(n)
    p = np.empty(n)
    p2 = np.empty(n)
    p3 = np.empty(n)
    grade = np.empty(n)
    ambient = np.empty(n)

    d_t, th_t = setpoint[0], th0
    el_t = 0.42 + 0.30 * setpoint[0]
    p_t, p2_t, p3_t, g_t, a_t = 0.0, 0.0, 0.0, 0.0, 0.0
    for t in range(n):
        d_t = min(max(d_t + 0.08 * (setpoint[t] - d_t) + 0.005 * eps_d[t], 0.003), 0.995)
        th_t = min(max(th_t + 0.012 * (0.55 + 0.42 * d_t - th_t) + 0.003 * eps_th[t], 0.0), 1.0)
        el_t = min(max(el_t + 0.05 * (0.42 + 0.30 * d_t - el_t) + 0.022 * eps_el[t], 0.0), 1.0)
        p_t = p_t + 0.06 + 0.02 * eps_p[t]
        p2_t = p2_t + 0.031 + 0.012 * eps_p2[t]
        p3_t = p3_t + 0.013 + 0.006 * eps_p3[t]
        g_t = min(max(g_t - 0.02 * g_t + 0.09 * eps_grade[t], -1.0), 1.0)  # road grade
        a_t = min(max(a_t - 0.004 * a_t + 0.035 * eps_amb[t], -1.0), 1.0)  # ambient temp
        d[t], th[t], el[t], p[t] = d_t, th_t, el_t, p_t
        p2[t], p3[t], grade[t], ambient[t] = p2_t, p3_t, g_t, a_t
    return d, th, el, p, p2, p3, grade, ambient


def _clean_values(n: int, noise_scale: float, rng: np.random.Generator) -> np.ndarray:
    d, th, el, p, p2, p3, grade, ambient = _simulate_latents(n, rng)
    noise = rng.standard_normal((n, 20)) * (_BASE_NOISE * noise_scale)
    # slow per-channel sensor wander: independent jittered phases
    q0 = rng.uniform(0.0, 2.0 * math.pi, size=20)
    q = (
        q0
        + _WANDER_RATE * np.arange(n)[:, None]
        + 0.06 * np.cumsum(rng.standard_normal((n, 20)), axis=0)
    )
    wander = _WANDER_AMP * np.sin(q)

    speed = 165.0 * d**1.15 - 7.5 * grade * d  # gearing plus grade drag
    values = np.empty((n, 20))
    values[:, 0] = 14.0 + 40.0 * th + 8.0 * d + 2.2 * ambient
    values[:, 1] = 28.0 + 70.0 * d + 1.5 * ambient
    values[:, 2] = 190.0 - 130.0 * d
    values[:, 3] = 850.0 + 4600.0 * d - 140.0 * grade * d
    values[:, 4] = 0.45 + 3.9 * d
    values[:, 5] = 1.8 + 11.5 * d + 0.38 * grade
    values[:, 6] = 3.0 + 92.0 * d
    values[:, 7] = -15.0 + 125.0 * th + 2.0 * ambient
    values[:, 8] = 4.3 - 2.6 * el
    values[:, 9] = 11.0 + 4.0 * el
    values[:, 10] = (d > 0.065).astype(np.float64)
    values[:, 11] = 0.45 + 0.22 * np.sin(p) + 0.06 * np.sin(p2) + 0.12 * d
    values[:, 12] = 0.50 + 0.22 * np.sin(p - 1.2) + 0.05 * np.sin(p2 - 0.7) + 0.12 * d
    values[:, 13] = speed
    values[:, 14] = 10.0 + 78.0 * d + 6.0 * th + 4.5 * grade
    values[:, 15] = 15.0 + 70.0 * d + 2.2 * np.sin(p2 + 1.0) + 2.0 * np.sin(p3)
    values[:, 16] = (th > 0.81).astype(np.float64)
    values[:, 17] = 40.0 - 20.0 * d - 6.0 * th - 1.2 * grade + 0.6 * np.sin(p3 - 0.9)
    values[:, 18] = (speed > 8.5).astype(np.float64)
    values[:, 19] = (d > 0.62).astype(np.float64)
    return values + wander + noise


def generate(catalog: SensorCatalog, config: ScenarioConfig) -> tuple[Dataset, GroundTruth]:
    """Produce one telemetry dataset plus its ground truth.

    Deterministic for a fixed config; injecting faults never perturbs
    the clean values of unaffected cells.
    """
    for fault in config.faults:
        if not 0 <= fault.sensor_id < len(catalog):
            raise UnknownSensorError(f"fault sensor id {fault.sensor_id} not in catalog")

    rng = np.random.default_rng(config.seed)
    clean = _clean_values(config.n_frames, config.noise_scale, rng)
    lo = np.array([s.physical_min for s in catalog])
    hi = np.array([s.physical_max for s in catalog])
    clean = np.clip(clean, lo, hi)

    values = clean.copy()
    flags = np.zeros_like(clean, dtype=bool)
    for i, fault in enumerate(config.faults):
        frng = np.random.default_rng([config.seed, 101, i])
        window = np.arange(fault.start_frame, fault.end_frame + 1)
        s = fault.sensor_id
        if fault.kind is FaultKind.STUCK_AT:
            injected = np.full(window.size, fault.value)
        elif fault.kind is FaultKind.OFFSET:
            injected = clean[window, s] + fault.delta
        elif fault.kind is FaultKind.DRIFT:
            injected = clean[window, s] + fault.rate * np.arange(window.size)
        elif fault.kind is FaultKind.NOISE_BURST:
            injected = clean[window, s] + frng.normal(0.0, fault.scale, size=window.size)
        else:  # DROPOUT: the channel reads its physical minimum
            injected = np.full(window.size, lo[s])
        values[window, s] = np.clip(injected, lo[s], hi[s])  # sensors rail at their bounds
        flags[window, s] = True

    timestamps = config.start_timestamp_ms + config.period_ms * np.arange(
        config.n_frames, dtype=np.int64
    )
    dataset = Dataset(catalog, timestamps, values)
    truth = GroundTruth(
        timestamps_ms=timestamps.copy(),
        true_values=clean,
        fault_flags=flags,
    )
    return dataset, truth


# --- benchmark scoring -------------------------------------------------------


@dataclass(frozen=True)
class SensorBenchmark:
    """Defective-detection quality for one sensor.

    ``precision`` is 1.0 by convention when the detector never fired;
    ``recall`` is NaN when the scenario had no fault on the sensor.
    ``detection_latency_frames`` averages, over detected fault windows,
    the frames between window start and the first Defective call.
    ``substitution_mae`` is the raw-unit error of substituted values
    against ground truth inside fault windows (NaN when nothing was
    substituted).
    """

    sensor_id: int
    precision: float
    recall: float
    detection_latency_frames: float
    substitution_mae: float
    n_faulted_frames: int


@dataclass(frozen=True)
class BenchmarkReport:
    per_sensor: tuple[SensorBenchmark, ...]
    clean_frame_false_defective_rate: float
    n_frames: int
    n_clean_frames: int


def _fault_windows(flags: np.ndarray) -> list[tuple[int, int]]:
    """Contiguous True runs as (start, end) inclusive pairs."""
    idx = np.flatnonzero(flags)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([idx[0]], idx[breaks + 1]))
    ends = np.concatenate((idx[breaks], [idx[-1]]))
    return list(zip(starts.tolist(), ends.tolist()))


def benchmark_report(reports: Sequence[MonitorReport], truth: GroundTruth) -> BenchmarkReport:
    """Score Defective classifications and substitutions against ground truth."""
    n = truth.fault_flags.shape[0]
    if len(reports) != n:
        raise LengthMismatchError(
            f"{len(reports)} reports vs {n} ground-truth frames"
        )
    n_sensors = truth.fault_flags.shape[1]
    defective = np.zeros((n, n_sensors), dtype=bool)
    substituted = np.full((n, n_sensors), np.nan)
    for t, report in enumerate(reports):
        for entry in report.sensors:
            if entry.substituted_value is not None:
                defective[t, entry.sensor_id] = True
                substituted[t, entry.sensor_id] = entry.substituted_value

    flags = truth.fault_flags
    clean_rows = ~flags.any(axis=1)
    n_clean = int(clean_rows.sum())
    if n_clean:
        false_rate = float(defective[clean_rows].mean())
    else:
        false_rate = 0.0

    per_sensor = []
    for s in range(n_sensors):
        tp = int((defective[:, s] & flags[:, s]).sum())
        fp = int((defective[:, s] & ~flags[:, s]).sum())
        fn = int((~defective[:, s] & flags[:, s]).sum())
        precision = tp / (tp + fp) if tp + fp else 1.0
        recall = tp / (tp + fn) if tp + fn else float("nan")

        latencies = []
        for start, end in _fault_windows(flags[:, s]):
            hits = np.flatnonzero(defective[start:end + 1, s])
            if hits.size:
                latencies.append(int(hits[0]))
        latency = float(np.mean(latencies)) if latencies else float("nan")

        sub_cells = flags[:, s] & np.isfinite(substituted[:, s])
        if sub_cells.any():
            sub_mae = float(
                np.mean(np.abs(substituted[sub_cells, s] - truth.true_values[sub_cells, s]))
            )
        else:
            sub_mae = float("nan")

        per_sensor.append(
            SensorBenchmark(
                sensor_id=s,
                precision=precision,
                recall=recall,
                detection_latency_frames=latency,
                substitution_mae=sub_mae,
                n_faulted_frames=tp + fn,
            )
        )

    return BenchmarkReport(
        per_sensor=tuple(per_sensor),
        clean_frame_false_defective_rate=false_rate,
        n_frames=n,
        n_clean_frames=n_clean,
    )


# --- configuration and ground-truth files -----------------------------------


def fault_from_dict(doc: dict, catalog: SensorCatalog) -> FaultSpec:
    try:
        sensor = doc["sensor"]
        sensor_id = catalog.id_of(sensor) if isinstance(sensor, str) else int(sensor)
        return FaultSpec(
            sensor_id=sensor_id,
            kind=FaultKind(doc["kind"]),
            start_frame=int(doc["start_frame"]),
            end_frame=int(doc["end_frame"]),
            value=None if doc.get("value") is None else float(doc["value"]),
            delta=None if doc.get("delta") is None else float(doc["delta"]),
            rate=None if doc.get("rate") is None else float(doc["rate"]),
            scale=None if doc.get("scale") is None else float(doc["scale"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ArtifactFormatError(f"invalid fault entry {doc!r}: {exc}") from exc


def load_scenario(path, catalog: SensorCatalog) -> ScenarioConfig:
    """Read a scenario configuration document (JSON)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ArtifactFormatError(f"scenario file {path}: {exc}") from exc
    try:
        return ScenarioConfig(
            n_frames=int(doc["n_frames"]),
            seed=int(doc.get("seed", 0)),
            noise_scale=float(doc.get("noise_scale", 1.0)),
            period_ms=int(doc.get("period_ms", 1000)),
            start_timestamp_ms=int(doc.get("start_timestamp_ms", 0)),
            faults=tuple(fault_from_dict(f, catalog) for f in doc.get("faults", [])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ArtifactFormatError):
            raise
        raise ArtifactFormatError(f"invalid scenario document: {exc}") from exc


def write_ground_truth_csv(truth: GroundTruth, catalog: SensorCatalog, path_or_file) -> None:
    """Parallel CSV: per-sensor true-value columns then fault-flag columns."""

    def _write(fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        names = catalog.names
        writer.writerow(
            ["timestamp_ms"]
            + [f"{n}_true" for n in names]
            + [f"{n}_fault" for n in names]
        )
        for i in range(truth.true_values.shape[0]):
            writer.writerow(
                [int(truth.timestamps_ms[i])]
                + [repr(float(v)) for v in truth.true_values[i]]
                + [int(f) for f in truth.fault_flags[i]]
            )

    if isinstance(path_or_file, str) or hasattr(path_or_file, "__fspath__"):
        with open(path_or_file, "w", encoding="utf-8", newline="") as fh:
            _write(fh)
    else:
        _write(path_or_file)


def read_ground_truth_csv(path_or_file, catalog: SensorCatalog) -> GroundTruth:
    def _read(fh) -> GroundTruth:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ArtifactFormatError("ground-truth CSV is empty") from None
        names = catalog.names
        expected = (
            ["timestamp_ms"] + [f"{n}_true" for n in names] + [f"{n}_fault" for n in names]
        )
        if header != expected:
            raise ArtifactFormatError("ground-truth header does not match catalog")
        k = len(names)
        timestamps, values, flags = [], [], []
        for row in reader:
            if not row:
                continue
            timestamps.append(int(row[0]))
            values.append([float(x) for x in row[1:1 + k]])
            flags.append([bool(int(x)) for x in row[1 + k:1 + 2 * k]])
        return GroundTruth(
            timestamps_ms=np.array(timestamps, dtype=np.int64),
            true_values=np.array(values, dtype=np.float64),
            fault_flags=np.array(flags, dtype=bool),
        )

    if isinstance(path_or_file, str) or hasattr(path_or_file, "__fspath__"):
        with open(path_or_file, "r", encoding="utf-8", newline="") as fh:
            return _read(fh)
    return _read(path_or_file)
