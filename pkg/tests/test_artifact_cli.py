"""Artifact serialization round-trips and the command-line surface."""

import json

import numpy as np
import pytest

from ecumon.artifact import build_pipeline, load_artifact, save_artifact
from ecumon.cli import main
from ecumon.domain import SensorCatalog, default_catalog, save_catalog, write_telemetry_csv
from ecumon.errors import ArtifactFormatError, FingerprintMismatchError
from ecumon.monitor import process_frame
from ecumon.synthetic import ScenarioConfig, generate


class TestArtifactRoundTrip:
    def test_process_frame_outputs_bit_identical(self, tmp_path, catalog, small_training, small_scenario):
        art = small_training.artifact
        path = tmp_path / "model.json"
        save_artifact(art, path)
        loaded = load_artifact(path, catalog)

        dataset, _ = small_scenario
        before = build_pipeline(art, catalog)
        after = build_pipeline(loaded, catalog)
        for i in range(0, 100):
            a = process_frame(before, dataset.frame(i))
            b = process_frame(after, dataset.frame(i))
            assert a == b

    def test_fingerprint_mismatch_refused(self, tmp_path, catalog, small_training):
        path = tmp_path / "model.json"
        save_artifact(small_training.artifact, path)
        doc = catalog.to_json_dict()
        doc["sensors"][0]["physical_max"] = 151.0
        other = SensorCatalog.from_json_dict(doc)
        with pytest.raises(FingerprintMismatchError):
            load_artifact(path, other)

    def test_unsupported_version_refused(self, tmp_path, catalog, small_training):
        path = tmp_path / "model.json"
        save_artifact(small_training.artifact, path)
        doc = json.loads(path.read_text())
        doc["format_version"] = 999
        path.write_text(json.dumps(doc))
        with pytest.raises(ArtifactFormatError):
            load_artifact(path, catalog)

    def test_malformed_document_refused(self, tmp_path, catalog):
        path = tmp_path / "model.json"
        path.write_text('{"format_version": 1}')
        with pytest.raises(ArtifactFormatError):
            load_artifact(path, catalog)

    def test_save_is_deterministic(self, tmp_path, small_training):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_artifact(small_training.artifact, a)
        save_artifact(small_training.artifact, b)
        assert a.read_bytes() == b.read_bytes()


@pytest.fixture(scope="module")
def scenario_file(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    config = {"n_frames": 1500, "seed": 77, "noise_scale": 1.0}
    path = root / "scenario.json"
    path.write_text(json.dumps(config))
    return path


@pytest.fixture(scope="module")
def faulted_scenario_file(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_faulted")
    config = {
        "n_frames": 1500,
        "seed": 77,
        "noise_scale": 1.0,
        "faults": [
            {
                "sensor": "engine_speed",
                "kind": "stuck_at",
                "value": 7900.0,
                "start_frame": 900,
                "end_frame": 1100,
            }
        ],
    }
    path = root / "scenario.json"
    path.write_text(json.dumps(config))
    return path


class TestCliGenerate:
    def test_writes_both_csvs(self, tmp_path, scenario_file):
        out = tmp_path / "telemetry.csv"
        truth = tmp_path / "truth.csv"
        code = main(["generate", "--config", str(scenario_file), "--out", str(out), "--truth-out", str(truth)])
        assert code == 0
        assert len(out.read_text().splitlines()) == 1501  # header + frames
        assert len(truth.read_text().splitlines()) == 1501

    def test_byte_identical_reruns(self, tmp_path, scenario_file):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["generate", "--config", str(scenario_file), "--out", str(a)]) == 0
        assert main(["generate", "--config", str(scenario_file), "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_missing_config_names_path(self, tmp_path, capsys):
        code = main(["generate", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o.csv")])
        assert code == 2
        assert "nope.json" in capsys.readouterr().err


def _train_args(data, out, extra=()):
    return [
        "train", "--data", str(data), "--out", str(out), "--seed", "3",
        "--epochs", "8", "--batch-size", "64", "--learning-rate", "0.002",
        "--patience", "8", "--forest-trees", "2", "--forest-depth", "6",
        "--forest-min-leaf", "4", *extra,
    ]


@pytest.fixture(scope="module")
def trained_artifact(tmp_path_factory, scenario_file, faulted_scenario_file):
    root = tmp_path_factory.mktemp("trained")
    telemetry = root / "telemetry.csv"
    assert main(["generate", "--config", str(scenario_file), "--out", str(telemetry)]) == 0
    faulted = root / "faulted.csv"
    truth = root / "truth.csv"
    assert main(
        ["generate", "--config", str(faulted_scenario_file), "--out", str(faulted), "--truth-out", str(truth)]
    ) == 0
    artifact = root / "model.json"
    assert main(_train_args(telemetry, artifact)) == 0
    return {"telemetry": telemetry, "faulted": faulted, "truth": truth, "artifact": artifact}


class TestCliTrain:
    def test_artifact_loadable_with_twenty_forests(self, trained_artifact):
        art = load_artifact(trained_artifact["artifact"], default_catalog())
        assert len(art.bank) == 20

    def test_summary_table_printed(self, trained_artifact, tmp_path, capsys):
        out = tmp_path / "again.json"
        assert main(_train_args(trained_artifact["telemetry"], out)) == 0
        text = capsys.readouterr().out
        assert "manifold_air_temperature" in text
        assert "reconstruction r2" in text

    def test_rerun_byte_identical(self, trained_artifact, tmp_path):
        out = tmp_path / "again.json"
        assert main(_train_args(trained_artifact["telemetry"], out)) == 0
        assert out.read_bytes() == trained_artifact["artifact"].read_bytes()

    def test_too_few_frames_is_data_error(self, tmp_path, catalog, capsys):
        dataset, _ = generate(catalog, ScenarioConfig(n_frames=5, seed=1))
        data = tmp_path / "tiny.csv"
        write_telemetry_csv(dataset, data)
        assert main(_train_args(data, tmp_path / "m.json")) == 2


class TestCliEvaluate:
    def test_report_rows_in_catalog_order(self, trained_artifact, capsys):
        code = main([
            "evaluate", "--artifact", str(trained_artifact["artifact"]),
            "--data", str(trained_artifact["telemetry"]),
        ])
        assert code == 0
        out = capsys.readouterr().out
        lines = [l for l in out.splitlines() if l.strip()]
        names = default_catalog().names
        table = [l.split()[0] for l in lines if l.split() and l.split()[0] in names]
        assert table == names

    def test_benchmark_section_with_truth(self, trained_artifact, capsys):
        code = main([
            "evaluate", "--artifact", str(trained_artifact["artifact"]),
            "--data", str(trained_artifact["faulted"]),
            "--truth", str(trained_artifact["truth"]),
        ])
        assert code == 0
        out = capsys.readouterr().out
        assert "false-defective" in out
        assert "engine_speed" in out

    def test_fingerprint_mismatch_nonzero_exit(self, trained_artifact, tmp_path, capsys):
        doc = default_catalog().to_json_dict()
        doc["sensors"][0]["physical_max"] = 155.0
        other = tmp_path / "catalog.json"
        other.write_text(json.dumps(doc))
        code = main([
            "evaluate", "--artifact", str(trained_artifact["artifact"]),
            "--data", str(trained_artifact["telemetry"]), "--catalog", str(other),
        ])
        assert code == 2
        assert "fingerprint" in capsys.readouterr().err


class TestCliMonitor:
    def test_reports_and_alerts_written(self, trained_artifact, tmp_path):
        reports = tmp_path / "reports.jsonl"
        alerts = tmp_path / "alerts.jsonl"
        code = main([
            "monitor", "--artifact", str(trained_artifact["artifact"]),
            "--input", str(trained_artifact["faulted"]),
            "--out", str(reports), "--alert-log", str(alerts),
        ])
        assert code == 0
        lines = reports.read_text().splitlines()
        assert len(lines) == 1500
        record = json.loads(lines[0])
        assert len(record["sensors"]) == 20
        # the injected stuck-at fault must raise at least one alert for sensor 3
        alert_records = [json.loads(l) for l in alerts.read_text().splitlines()]
        assert any(a["sensor_id"] == 3 for a in alert_records)

    def test_clean_stream_has_empty_alert_log(self, tmp_path, catalog, trained_artifact):
        # a healthy in-distribution stretch of the drive raises no alerts
        clean, _ = generate(catalog, ScenarioConfig(n_frames=1500, seed=77))
        data = tmp_path / "clean.csv"
        write_telemetry_csv(clean.subset(range(200, 700)), data)
        alerts = tmp_path / "alerts.jsonl"
        code = main([
            "monitor", "--artifact", str(trained_artifact["artifact"]),
            "--input", str(data), "--out", str(tmp_path / "r.jsonl"),
            "--alert-log", str(alerts), "--alert-threshold", "defective",
        ])
        assert code == 0
        assert alerts.read_text() == ""

    def test_alert_threshold_flag_lowers_band(self, trained_artifact, tmp_path):
        def run(threshold):
            alerts = tmp_path / f"alerts_{threshold}.jsonl"
            assert main([
                "monitor", "--artifact", str(trained_artifact["artifact"]),
                "--input", str(trained_artifact["faulted"]),
                "--out", str(tmp_path / f"r_{threshold}.jsonl"),
                "--alert-log", str(alerts), "--alert-threshold", threshold,
            ]) == 0
            return len(alerts.read_text().splitlines())

        assert run("normal") > run("defective")

    def test_rerun_byte_identical(self, trained_artifact, tmp_path):
        paths = []
        for tag in ("x", "y"):
            out = tmp_path / f"{tag}.jsonl"
            assert main([
                "monitor", "--artifact", str(trained_artifact["artifact"]),
                "--input", str(trained_artifact["telemetry"]), "--out", str(out),
            ]) == 0
            paths.append(out)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_malformed_frame_logged_stream_continues(self, trained_artifact, tmp_path):
        text = trained_artifact["telemetry"].read_text().splitlines()
        row = text[1].split(",")
        row[5] = "nan"
        corrupted = tmp_path / "corrupted.csv"
        corrupted.write_text("\n".join([text[0], ",".join(row)] + text[2:]) + "\n")
        out = tmp_path / "r.jsonl"
        code = main([
            "monitor", "--artifact", str(trained_artifact["artifact"]),
            "--input", str(corrupted), "--out", str(out),
        ])
        assert code == 0
        lines = [json.loads(l) for l in out.read_text().splitlines()]
        assert len(lines) == 1500
        assert lines[0].get("error") == "structural_violation"
        assert "sensors" in lines[1]


class TestExitCodes:
    def test_usage_error_is_one(self, capsys):
        assert main(["train"]) == 1  # missing required flags

    def test_unknown_command_is_one(self):
        assert main(["frobnicate"]) == 1

    def test_data_error_is_two(self, tmp_path):
        assert main([
            "evaluate", "--artifact", str(tmp_path / "missing.json"),
            "--data", str(tmp_path / "missing.csv"),
        ]) == 2


class TestCatalogFile:
    def test_save_load_round_trip(self, tmp_path, catalog):
        path = tmp_path / "catalog.json"
        save_catalog(catalog, path)
        from ecumon.domain import load_catalog

        loaded = load_catalog(path)
        assert loaded == catalog
        assert loaded.fingerprint() == catalog.fingerprint()
