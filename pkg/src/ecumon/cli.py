"""Command-line surface: generate | train | evaluate | monitor.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .artifact import build_pipeline, load_artifact, save_artifact
from .autoencoder import TrainConfig, reconstruction_r2_by_sensor
from .domain import (
    HealthIndex,
    default_catalog,
    load_catalog,
    read_telemetry_csv,
    write_telemetry_csv,
)
from .errors import DataError, EcuMonError
from .forest import ForestConfig, evaluate_bank
from .monitor import MonitorReport, process_stream
from .preprocessing import cleanse, normalize
from .synthetic import (
    benchmark_report,
    generate,
    load_scenario,
    read_ground_truth_csv,
    write_ground_truth_csv,
)
from .training import train_pipeline

_ALERT_CHOICES = [h.label for h in HealthIndex]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 for usage problems, not argparse's 2
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ecumon", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate synthetic telemetry plus ground truth")
    p.add_argument("--config", required=True, help="scenario configuration (JSON)")
    p.add_argument("--catalog", help="catalog file (JSON); defaults to the built-in catalog")
    p.add_argument("--out", required=True, help="telemetry CSV output path")
    p.add_argument("--truth-out", help="ground-truth CSV output path")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="fit all pipeline components and write one artifact")
    p.add_argument("--data", required=True, help="telemetry CSV input path")
    p.add_argument("--catalog", help="catalog file (JSON)")
    p.add_argument("--out", required=True, help="artifact output path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    p.add_argument("--batch-size", type=int, default=TrainConfig.batch_size)
    p.add_argument("--learning-rate", type=float, default=TrainConfig.learning_rate)
    p.add_argument("--patience", type=int, default=TrainConfig.early_stop_patience)
    p.add_argument("--forest-trees", type=int, default=ForestConfig.n_trees)
    p.add_argument("--forest-depth", type=int, default=ForestConfig.max_depth)
    p.add_argument("--forest-min-leaf", type=int, default=ForestConfig.min_samples_leaf)
    p.add_argument(
        "--features-per-target",
        type=int,
        help="use this peer count for every sensor instead of the per-sensor defaults",
    )
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score an artifact on telemetry data")
    p.add_argument("--artifact", required=True)
    p.add_argument("--data", required=True, help="telemetry CSV input path")
    p.add_argument("--truth", help="ground-truth CSV for fault-detection scoring")
    p.add_argument("--catalog", help="catalog file (JSON)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("monitor", help="stream frames through a fitted pipeline")
    p.add_argument("--artifact", required=True)
    p.add_argument("--catalog", help="catalog file (JSON)")
    p.add_argument("--input", required=True, help="telemetry CSV path, or - for stdin")
    p.add_argument("--out", default="-", help="report records (JSON lines) path, or - for stdout")
    p.add_argument("--alert-log", help="alert records (JSON lines) path")
    p.add_argument("--alert-threshold", choices=_ALERT_CHOICES, default="almost-defective")
    p.set_defaults(func=cmd_monitor)

    return parser


def _load_catalog(args):
    return load_catalog(args.catalog) if args.catalog else default_catalog()


def cmd_generate(args) -> int:
    catalog = _load_catalog(args)
    config = load_scenario(args.config, catalog)
    dataset, truth = generate(catalog, config)
    write_telemetry_csv(dataset, args.out)
    print(f"wrote {len(dataset)} frames to {args.out}")
    if args.truth_out:
        write_ground_truth_csv(truth, catalog, args.truth_out)
        print(f"wrote ground truth to {args.truth_out}")
    return 0


def cmd_train(args) -> int:
    catalog = _load_catalog(args)
    dataset = read_telemetry_csv(args.data, catalog)
    feature_counts = None
    if args.features_per_target is not None:
        feature_counts = {s.id: args.features_per_target for s in catalog}
    result = train_pipeline(
        dataset,
        seed=args.seed,
        ae_config=TrainConfig(
            epochs=args.epochs,
            batch_size=args.batch_size,
            learning_rate=args.learning_rate,
            early_stop_patience=args.patience,
        ),
        forest_config=ForestConfig(
            n_trees=args.forest_trees,
            max_depth=args.forest_depth,
            min_samples_leaf=args.forest_min_leaf,
        ),
        feature_counts=feature_counts,
    )
    save_artifact(result.artifact, args.out)

    rows = result.artifact.metadata["rows"]
    print(
        f"cleansed {rows['input']} -> {rows['input'] - rows['dropped_nonfinite'] - rows['dropped_out_of_range']} frames "
        f"(dropped {rows['dropped_nonfinite']} non-finite, {rows['dropped_out_of_range']} out-of-range)"
    )
    print(
        f"split: train={rows['train']} validation={rows['validation']} test={rows['test']}; "
        f"autoencoder epochs={result.artifact.metadata['completed_epochs']} "
        f"(best={result.artifact.metadata['best_epoch'] + 1})"
    )
    test_n = normalize(result.splits.test, result.artifact.normalizer)
    r2 = reconstruction_r2_by_sensor(result.artifact.autoencoder, test_n)
    profile = result.artifact.profile
    print(f"{'sensor':<28}{'reconstruction r2':>18}{'residual mean':>16}{'residual std':>14}{'k':>4}")
    for spec in catalog:
        r2_text = f"{r2[spec.id]:.6f}" if np.isfinite(r2[spec.id]) else "n/a"
        print(
            f"{spec.name:<28}{r2_text:>18}"
            f"{profile.mean[spec.id]:>16.6f}{profile.std[spec.id]:>14.6f}"
            f"{result.feature_counts[spec.id]:>4}"
        )
    print(f"artifact written to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    catalog = _load_catalog(args)
    artifact = load_artifact(args.artifact, catalog)
    dataset = read_telemetry_csv(args.data, catalog)

    clean, report = cleanse(dataset)
    dropped = report.rows_in - report.rows_out
    if dropped:
        print(f"note: dropped {dropped} structurally invalid frames before scoring")
    data_n = normalize(clean, artifact.normalizer)
    r2 = reconstruction_r2_by_sensor(artifact.autoencoder, data_n)
    scores = evaluate_bank(artifact.bank, data_n)

    print(f"{'sensor':<28}{'reconstruction r2':>18}{'forest mae':>14}{'forest r2':>12}{'k':>4}")
    for spec, score in zip(catalog, scores):
        ae_text = f"{r2[spec.id]:.6f}" if np.isfinite(r2[spec.id]) else "n/a"
        r2_text = f"{score.r2:.6f}" if np.isfinite(score.r2) else "n/a"
        print(f"{spec.name:<28}{ae_text:>18}{score.mae:>14.6f}{r2_text:>12}{score.k:>4}")

    if args.truth:
        truth = read_ground_truth_csv(args.truth, catalog)
        pipeline = build_pipeline(artifact, catalog)
        reports = [r for r in process_stream(pipeline, iter(dataset)) if isinstance(r, MonitorReport)]
        bench = benchmark_report(reports, truth)
        print(
            f"clean-frame false-defective rate: {bench.clean_frame_false_defective_rate:.6f} "
            f"({bench.n_clean_frames} clean frames of {bench.n_frames})"
        )
        print(f"{'sensor':<28}{'precision':>10}{'recall':>8}{'latency':>8}{'sub mae':>12}")
        for spec, sb in zip(catalog, bench.per_sensor):
            if sb.n_faulted_frames == 0:
                continue
            latency = f"{sb.detection_latency_frames:.1f}" if np.isfinite(sb.detection_latency_frames) else "n/a"
            sub = f"{sb.substitution_mae:.6f}" if np.isfinite(sb.substitution_mae) else "n/a"
            print(f"{spec.name:<28}{sb.precision:>10.4f}{sb.recall:>8.4f}{latency:>8}{sub:>12}")
    return 0


def cmd_monitor(args) -> int:
    catalog = _load_catalog(args)
    artifact = load_artifact(args.artifact, catalog)
    pipeline = build_pipeline(
        artifact, catalog, alert_threshold=HealthIndex.from_label(args.alert_threshold)
    )

    if args.input == "-":
        dataset = read_telemetry_csv(sys.stdin, catalog)
    else:
        dataset = read_telemetry_csv(args.input, catalog)

    out = sys.stdout if args.out == "-" else open(args.out, "w", encoding="utf-8")
    alert_log = open(args.alert_log, "w", encoding="utf-8") if args.alert_log else None
    n_reports = n_errors = n_alerts = 0
    try:
        for record in process_stream(pipeline, iter(dataset)):
            out.write(json.dumps(record.to_json_dict(), sort_keys=True) + "\n")
            if isinstance(record, MonitorReport):
                n_reports += 1
                for alert in record.alerts:
                    n_alerts += 1
                    if alert_log:
                        alert_log.write(
                            json.dumps(
                                {
                                    "timestamp_ms": record.timestamp_ms,
                                    "sensor_id": alert.sensor_id,
                                    "name": alert.name,
                                    "health": alert.health.label,
                                    "message": alert.message,
                                },
                                sort_keys=True,
                            )
                            + "\n"
                        )
            else:
                n_errors += 1
    finally:
        if out is not sys.stdout:
            out.close()
        if alert_log:
            alert_log.close()
    print(
        f"processed {n_reports} frames ({n_errors} rejected), {n_alerts} alerts",
        file=sys.stderr,
    )
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EcuMonError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
