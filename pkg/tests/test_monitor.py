"""Frame processing, substitution, alerting, and stream behavior."""

import dataclasses

import numpy as np
import pytest

from ecumon.domain import HealthIndex, SensorFrame
from ecumon.errors import StructuralViolationError
from ecumon.monitor import StreamError, process_frame, process_stream


def healthy_frame(small_scenario, index=100):
    dataset, _ = small_scenario
    return dataset.frame(index)


def stuck_frame(catalog, small_scenario, sensor_id=3, value=7900.0, index=100):
    frame = healthy_frame(small_scenario, index)
    values = frame.values.copy()
    values[sensor_id] = value
    return SensorFrame(frame.timestamp_ms, values)


class TestProcessFrame:
    def test_report_covers_every_sensor(self, small_pipeline, small_scenario):
        report = process_frame(small_pipeline, healthy_frame(small_scenario))
        assert len(report.sensors) == 20
        assert [e.sensor_id for e in report.sensors] == list(range(20))

    def test_mostly_healthy_on_clean_frame(self, small_pipeline, small_scenario):
        report = process_frame(small_pipeline, healthy_frame(small_scenario))
        assert sum(e.health is HealthIndex.DEFECTIVE for e in report.sensors) == 0
        assert sum(e.substituted_value is not None for e in report.sensors) == 0

    def test_substituted_iff_defective(self, small_pipeline, small_scenario, catalog):
        for index in (50, 500, 1500):
            for sensor_id, value in ((3, 7900.0), (7, 139.0), (1, 250.0)):
                frame = stuck_frame(catalog, small_scenario, sensor_id, value, index)
                report = process_frame(small_pipeline, frame)
                for entry in report.sensors:
                    assert (entry.substituted_value is not None) == (
                        entry.health is HealthIndex.DEFECTIVE
                    )

    def test_gross_fault_detected_and_substituted(self, small_pipeline, small_scenario, catalog):
        frame = stuck_frame(catalog, small_scenario, sensor_id=3, value=7900.0)
        report = process_frame(small_pipeline, frame)
        entry = report.sensors[3]
        assert entry.health is HealthIndex.DEFECTIVE
        assert entry.raw_value == 7900.0
        assert entry.substituted_value is not None
        # the estimate should land near the pre-fault reading, far from the rail
        true_value = healthy_frame(small_scenario).values[3]
        assert abs(entry.substituted_value - true_value) < 500.0
        assert any(a.sensor_id == 3 for a in report.alerts)

    def test_alert_for_every_sensor_at_or_above_threshold(self, small_pipeline, small_scenario, catalog):
        frame = stuck_frame(catalog, small_scenario, sensor_id=3, value=7900.0)
        report = process_frame(small_pipeline, frame)
        flagged = {e.sensor_id for e in report.sensors if e.health >= small_pipeline.alert_threshold}
        assert {a.sensor_id for a in report.alerts} == flagged

    def test_alert_threshold_configurable(self, small_pipeline, small_scenario):
        eager = dataclasses.replace(small_pipeline, alert_threshold=HealthIndex.HEALTHY)
        report = process_frame(eager, healthy_frame(small_scenario))
        assert len(report.alerts) == 20

    def test_residual_is_normalized_abs_difference(self, small_pipeline, small_scenario):
        from ecumon.autoencoder import forward
        from ecumon.preprocessing import normalize

        frame = healthy_frame(small_scenario)
        report = process_frame(small_pipeline, frame)
        x = normalize(frame.values, small_pipeline.normalizer)
        recon = forward(small_pipeline.autoencoder, x)
        for entry in report.sensors:
            assert entry.residual == pytest.approx(abs(x[entry.sensor_id] - recon[entry.sensor_id]))
            assert entry.residual >= 0

    def test_length_violation_rejected(self, small_pipeline):
        with pytest.raises(StructuralViolationError):
            process_frame(small_pipeline, SensorFrame(0, np.zeros(19)))

    def test_nan_rejected_with_sensor_id(self, small_pipeline, small_scenario):
        frame = healthy_frame(small_scenario)
        values = frame.values.copy()
        values[6] = np.nan
        with pytest.raises(StructuralViolationError) as exc:
            process_frame(small_pipeline, SensorFrame(0, values))
        assert exc.value.violations[0].sensor_id == 6

    def test_out_of_range_is_accepted(self, small_pipeline, small_scenario, catalog):
        # out-of-range raw values are exactly what faults look like
        frame = stuck_frame(catalog, small_scenario, sensor_id=9, value=15.9)
        report = process_frame(small_pipeline, frame)
        assert report.sensors[9].raw_value == 15.9

    def test_pure_function_of_frame(self, small_pipeline, small_scenario):
        frame = healthy_frame(small_scenario, 42)
        first = process_frame(small_pipeline, frame)
        process_frame(small_pipeline, healthy_frame(small_scenario, 43))
        second = process_frame(small_pipeline, frame)
        assert first == second


class TestProcessStream:
    def test_one_report_per_frame_in_order(self, small_pipeline, small_scenario):
        dataset, _ = small_scenario
        frames = [dataset.frame(i) for i in range(30)]
        records = list(process_stream(small_pipeline, frames))
        assert len(records) == 30
        assert [r.timestamp_ms for r in records] == [f.timestamp_ms for f in frames]

    def test_stream_continues_past_malformed_frame(self, small_pipeline, small_scenario):
        dataset, _ = small_scenario
        frames = [dataset.frame(0), SensorFrame(999, np.full(20, np.nan)), dataset.frame(1)]
        records = list(process_stream(small_pipeline, frames))
        assert len(records) == 3
        assert isinstance(records[1], StreamError)
        assert records[1].timestamp_ms == 999
        assert not isinstance(records[0], StreamError)
        assert not isinstance(records[2], StreamError)

    def test_stream_equals_mapped_process_frame(self, small_pipeline, small_scenario):
        dataset, _ = small_scenario
        frames = [dataset.frame(i) for i in range(20)]
        streamed = list(process_stream(small_pipeline, frames))
        mapped = [process_frame(small_pipeline, f) for f in frames]
        assert streamed == mapped

    def test_order_independence_of_per_frame_results(self, small_pipeline, small_scenario, rng):
        dataset, _ = small_scenario
        frames = [dataset.frame(i) for i in range(25)]
        baseline = {f.timestamp_ms: process_frame(small_pipeline, f) for f in frames}
        shuffled = list(frames)
        rng.shuffle(shuffled)
        for frame in shuffled:
            assert process_frame(small_pipeline, frame) == baseline[frame.timestamp_ms]
