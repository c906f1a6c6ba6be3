"""Command line entry point.

Subcommands: simulate, build-fingerprint, localize, evaluate, sweep.
Exit codes: 0 success, 1 pipeline error, 2 configuration / IO error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .detection import DetectorParams
from .evaluate import (
    SweepSpec,
    build_manual_fingerprint,
    compare_fingerprints,
    make_test_set,
    precision_recall,
    run_sweep,
    save_cdf_csv,
)
from .fingerprint import load_fingerprint, make_grid, save_fingerprint
from .ingest import (
    Topology,
    load_fixes_csv,
    load_rss_csv,
    load_topology,
    save_fixes_csv,
    save_rss_csv,
    save_topology,
)
from .locate import TestVector, localize
from .pipeline import build_fingerprint
from .simulate import default_topology, load_manifest, render_dataset, save_manifest, standard_suite

DEFAULT_SWEEP_VALUES = {
    "tau": [0.0, 0.05, 0.10, 0.15, 0.20, 0.25],
    "zone_order": [1, 2, 3, 4, 5, 6, 7, 8, 9],
    "stream_density": ["half", "full"],
}


def _require_file(path: Path, what: str) -> Path:
    if not path.exists():
        raise ConfigError(f"{what} not found: {path}")
    return path


def _load_topology(config: RunConfig) -> Topology:
    if config.topology:
        return load_topology(_require_file(Path(config.topology), "topology file"))
    return load_topology(_require_file(config.out_dir() / "topology.txt", "topology file"))


def _detector_params(config: RunConfig) -> DetectorParams:
    return DetectorParams(tau=config.tau, zone_order=config.zone_order)


def _load_dataset(config: RunConfig, topology: Topology):
    samples = load_rss_csv(_require_file(config.path("rss", "rss.csv"), "rss stream"), topology)
    fixes = load_fixes_csv(_require_file(config.path("fixes", "fixes.csv"), "fixes stream"), topology)
    labels = load_manifest(_require_file(config.path("manifest", "manifest.csv"), "scenario manifest"))
    return samples, fixes, labels


def cmd_simulate(config: RunConfig) -> int:
    out = config.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    if config.topology:
        topology = load_topology(_require_file(Path(config.topology), "topology file"))
    else:
        topology = default_topology()
        save_topology(topology, out / "topology.txt")
        print(f"using built-in testbed, written to {out / 'topology.txt'}")
    grid = make_grid(topology, config.cell_size)
    scenarios = standard_suite(
        topology, grid,
        seed=config.seed,
        counts=config.suite_counts,
        duration=config.duration,
        epoch_len=config.epoch_len,
    )
    samples, fixes, labels = render_dataset(
        topology, scenarios, config.propagation(), grid,
        rate=config.rate, epoch_len=config.epoch_len,
    )
    save_rss_csv(samples, config.path("rss", "rss.csv"))
    save_fixes_csv(fixes, config.path("fixes", "fixes.csv"))
    save_manifest(labels, config.path("manifest", "manifest.csv"))
    by_kind: dict[str, int] = {}
    for s in scenarios:
        kind = s.id.rsplit("_", 1)[0]
        by_kind[kind] = by_kind.get(kind, 0) + 1
    report_lines = [f"seed {config.seed}"]
    report_lines += [f"scenarios {kind} {by_kind[kind]}" for kind in sorted(by_kind)]
    report_lines += [
        f"samples {len(samples)}",
        f"fixes {len(fixes)}",
        f"epochs {len(labels.entries)}",
    ]
    (out / "run_report.txt").write_text("\n".join(report_lines) + "\n")
    for line in report_lines:
        print(line)
    return 0


def cmd_build(config: RunConfig) -> int:
    topology = _load_topology(config)
    samples, fixes, labels = _load_dataset(config, topology)
    silence = {e for e, lab in labels.entries.items() if lab.silence}
    fp, report = build_fingerprint(
        topology, samples, fixes, silence, _detector_params(config),
        cell_size=config.cell_size, epoch_len=config.epoch_len,
    )
    out = config.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    save_fingerprint(fp, config.path("fingerprint", "fingerprint.txt"))
    (out / "build_report.txt").write_text(report.to_text())
    for line in report.summary_lines():
        print(line)
    print(f"fingerprint records: {len(fp.records)}")
    return 0


def cmd_localize(config: RunConfig, vectors_path: str, out_path: str | None) -> int:
    fp = load_fingerprint(
        _require_file(config.path("fingerprint", "fingerprint.txt"), "fingerprint file")
    )
    lines_out = []
    vectors_file = _require_file(Path(vectors_path), "test vector file")
    for lineno, raw in enumerate(vectors_file.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != fp.k + 1:
            raise ValueError(
                f"{vectors_file}:{lineno}: expected epoch plus {fp.k} RSS values, "
                f"got {len(parts)} fields"
            )
        epoch = int(float(parts[0]))
        rss = np.asarray([float(t) for t in parts[1:]])
        est = localize(fp, TestVector(rss=rss, epoch=epoch))
        lines_out.append(
            f"{epoch},{est.cell[0]},{est.cell[1]},{est.center.x!r},{est.center.y!r},{est.distance!r}"
        )
    text = "\n".join(lines_out) + ("\n" if lines_out else "")
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_evaluate(config: RunConfig) -> int:
    topology = _load_topology(config)
    samples, fixes, labels = _load_dataset(config, topology)
    silence = {e for e, lab in labels.entries.items() if lab.silence}
    fp, report = build_fingerprint(
        topology, samples, fixes, silence, _detector_params(config),
        cell_size=config.cell_size, epoch_len=config.epoch_len,
    )
    precision, recall, counts = precision_recall(report.stored_by_epoch(), labels)

    grid = fp.grid
    manual = build_manual_fingerprint(topology, grid, config.propagation(), _detector_params(config))
    test_set = make_test_set(
        topology, grid, config.propagation(),
        n_points=config.test_points, duration=config.test_duration,
        rate=config.rate, seed=config.seed,
    )
    comparison = compare_fingerprints(fp, manual, test_set)

    out = config.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    save_cdf_csv(comparison.crowd_errors, out / "cdf_crowdsourced.csv")
    save_cdf_csv(comparison.manual_errors, out / "cdf_manual.csv")
    metric_lines = [
        f"precision {'undefined' if precision is None else repr(precision)}",
        f"recall {'undefined' if recall is None else repr(recall)}",
        f"stored_correct {counts.stored_correct}",
        f"stored_wrong {counts.stored_wrong}",
        f"discarded_correct {counts.discarded_correct}",
        f"discarded_wrong {counts.discarded_wrong}",
        f"median_error_crowdsourced_m {comparison.crowd_median!r}",
        f"median_error_manual_m {comparison.manual_median!r}",
        f"median_gap_m {comparison.median_gap!r}",
    ]
    (out / "metrics.txt").write_text("\n".join(metric_lines) + "\n")
    for line in metric_lines:
        print(line)
    return 0


def cmd_sweep(config: RunConfig, parameter: str, values_arg: str | None) -> int:
    topology = _load_topology(config)
    samples, fixes, labels = _load_dataset(config, topology)
    if values_arg:
        raw = [t for t in values_arg.split(",") if t.strip()]
        if parameter == "tau":
            values = [float(t) for t in raw]
        elif parameter == "zone_order":
            values = [int(t) for t in raw]
        else:
            values = raw
    else:
        values = DEFAULT_SWEEP_VALUES[parameter]
    spec = SweepSpec(
        parameter=parameter,
        values=values,
        fixed=_detector_params(config),
        topology=topology,
        samples=samples,
        fixes=fixes,
        labels=labels,
        cell_size=config.cell_size,
        epoch_len=config.epoch_len,
    )
    result = run_sweep(spec)
    out = config.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    (out / f"sweep_{parameter}.csv").write_text(result.to_csv())
    (out / f"sweep_{parameter}_verdict.txt").write_text(result.verdict() + "\n")
    sys.stdout.write(result.to_csv())
    print(result.verdict())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fresnelmap",
        description="Crowdsourced device-free RSS fingerprinting pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="path to key = value configuration file")
        p.add_argument("--seed", type=int, help="override random seed")
        p.add_argument("--tau", type=float, help="device-free activation threshold")
        p.add_argument("--zone-order", type=int, help="Fresnel zone order")
        p.add_argument("--cell-size", type=float, help="grid cell size in meters")
        p.add_argument("--out", help="output directory")

    p_sim = sub.add_parser("simulate", help="render the synthetic dataset")
    add_common(p_sim)

    p_build = sub.add_parser("build-fingerprint", help="build the crowdsourced fingerprint")
    add_common(p_build)

    p_loc = sub.add_parser("localize", help="localize test vectors against a fingerprint")
    add_common(p_loc)
    p_loc.add_argument("--vectors", required=True, help="test vector CSV (epoch,rss_1..rss_k)")
    p_loc.add_argument("--estimates", help="output CSV path (default stdout)")

    p_eval = sub.add_parser("evaluate", help="precision/recall and localization comparison")
    add_common(p_eval)

    p_sweep = sub.add_parser("sweep", help="parameter sweep with trend verdict")
    add_common(p_sweep)
    p_sweep.add_argument(
        "--parameter", required=True, choices=["tau", "zone_order", "stream_density"]
    )
    p_sweep.add_argument("--values", help="comma-separated sweep values")

    return parser


def _merge_config(args) -> RunConfig:
    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.tau is not None:
        config.tau = args.tau
    if args.zone_order is not None:
        config.zone_order = args.zone_order
    if args.cell_size is not None:
        config.cell_size = args.cell_size
    if args.out is not None:
        config.out = args.out
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _merge_config(args)
        if args.command == "simulate":
            return cmd_simulate(config)
        if args.command == "build-fingerprint":
            return cmd_build(config)
        if args.command == "localize":
            return cmd_localize(config, args.vectors, args.estimates)
        if args.command == "evaluate":
            return cmd_evaluate(config)
        if args.command == "sweep":
            return cmd_sweep(config, args.parameter, args.values)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, FileNotFoundError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
