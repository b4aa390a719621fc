"""Batch driver: run simulations, verify suites, inspect snapshots, render reports.

Exit codes: 0 success, 2 configuration error, 3 numerical abort,
4 invariant violation (including failed verification suites).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, serialize_config
from .dynamics import NumericalAbort, evolve
from .meanfield import mean_field_h
from .observables import record, write_diagnostics_csv
from .oracle import free_flow
from .report import render_report
from .state import load_snapshot, save_snapshot, state_distance, validate
from .verification import run_suite

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_INVARIANT = 4


class InvariantViolation(RuntimeError):
    """A monitored invariant left its tolerance band during a run."""


def run_simulation(config: RunConfig, out_dir, seed: int | None = None) -> dict:
    """Execute one configured run, writing all artifacts into ``out_dir``.

    Artifacts: ``diagnostics.csv`` (one record per stride), ``initial.hfb``
    and ``final.hfb`` snapshots, and ``manifest.txt`` echoing the
    configuration with build and timing information.  Outputs are
    deterministic for a fixed configuration and seed (the manifest's wall
    time excepted).
    """
    started = time.perf_counter()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = config.build_grid()
    V = config.build_potential(grid)
    v_kernel = config.build_pair_kernel(grid)
    effective_seed = seed if seed is not None else config.seed
    state0 = config.build_initial_state(grid, seed=effective_seed)
    save_snapshot(state0, out / "initial.hfb")

    records = []
    guard = config.positivity_guard
    guard_tol = config.positivity_tol

    def observer(step: int, t: float, state) -> None:
        rec = record(state, t, grid, V, v_kernel)
        records.append(rec)
        if guard and rec.gamma_floor < -guard_tol * (1.0 + rec.n_gamma):
            raise InvariantViolation(
                f"positivity floor {rec.gamma_floor:.3e} breached tolerance "
                f"{-guard_tol * (1.0 + rec.n_gamma):.3e} at t = {t:.6g}"
            )

    try:
        trajectory = evolve(
            state0,
            grid,
            V,
            v_kernel,
            T=config.T,
            dt=config.dt,
            scheme=config.scheme,
            stride=config.stride,
            observers=[observer],
        )
    except NumericalAbort as exc:
        write_diagnostics_csv(records, out / "diagnostics.csv")
        save_snapshot(exc.last_state, out / "abort.hfb")
        raise

    write_diagnostics_csv(records, out / "diagnostics.csv")
    save_snapshot(trajectory.final, out / "final.hfb")

    summary = {
        "steps": int(round(config.T / config.dt)) if config.T > 0 else 0,
        "records": len(records),
        "seed": effective_seed,
    }
    if config.free_flow_check:
        if np.any(v_kernel):
            raise ConfigError("check.free_flow", "requires pair.kind = zero")
        h0 = mean_field_h(grid, V, v_kernel, np.zeros_like(v_kernel))
        deviation = state_distance(trajectory.final, free_flow(state0, config.T, h0))
        summary["free_flow_deviation"] = deviation
        if deviation > config.free_flow_tol:
            _write_manifest(out, config, summary, time.perf_counter() - started)
            raise InvariantViolation(
                f"free-flow deviation {deviation:.3e} exceeds {config.free_flow_tol:.3e}"
            )

    _write_manifest(out, config, summary, time.perf_counter() - started)
    return summary


def _write_manifest(out: Path, config: RunConfig, summary: dict, wall: float) -> None:
    lines = ["# hfbflow run manifest", ""]
    lines.append(serialize_config(config.raw).rstrip("\n"))
    lines.append("")
    lines.append(f"effective.seed = {summary.get('seed')}")
    lines.append(f"build.package = hfbflow {__version__}")
    lines.append(f"build.numpy = {np.__version__}")
    lines.append(f"run.steps = {summary.get('steps')}")
    lines.append(f"run.records = {summary.get('records')}")
    if "free_flow_deviation" in summary:
        lines.append(f"check.free_flow.deviation = {summary['free_flow_deviation']:.17g}")
    lines.append(f"run.wall_seconds = {wall:.3f}")
    (out / "manifest.txt").write_text("\n".join(lines) + "\n")


def _cmd_run(args) -> int:
    path = Path(args.config)
    if not path.exists():
        print(f"error: config file not found: {path}", file=sys.stderr)
        return EXIT_CONFIG
    config = RunConfig.from_text(path.read_text())
    summary = run_simulation(config, args.out, seed=args.seed)
    print(f"run complete: {summary['records']} records -> {args.out}")
    if "free_flow_deviation" in summary:
        print(f"free-flow max deviation: {summary['free_flow_deviation']:.3e}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    try:
        report = run_suite(args.suite)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK if report.passed else EXIT_INVARIANT


def _cmd_snapshot_info(args) -> int:
    state = load_snapshot(args.file)
    grid = state.grid
    rep = validate(state)
    w = grid.weight
    n_phi = float(w * np.vdot(state.phi, state.phi).real)
    n_gamma = float(grid.ktrace(state.gamma).real)
    print(f"snapshot: {args.file}")
    print(f"  grid: d={grid.d} n={grid.n} L={grid.L:.17g} ({grid.n_nodes} nodes)")
    print(f"  condensate number: {n_phi:.17g}")
    print(f"  fluctuation number: {n_gamma:.17g}")
    print(f"  gamma hermiticity defect: {rep.gamma_hermiticity_defect:.3e}")
    print(f"  sigma symmetry defect: {rep.sigma_symmetry_defect:.3e}")
    print(f"  positivity floor: {rep.generalized_min_eig:.6e}")
    print(f"  valid at 1e-10: {rep.ok}")
    return EXIT_OK


def _cmd_report(args) -> int:
    run_dir = Path(args.run)
    csv_path = run_dir / "diagnostics.csv" if run_dir.is_dir() else run_dir
    if not csv_path.exists():
        print(f"error: no diagnostics found at {csv_path}", file=sys.stderr)
        return EXIT_CONFIG
    paths = render_report(csv_path, args.out)
    for p in paths:
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hfbflow",
        description="Condensate + fluctuation dynamics on a periodic box",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured simulation")
    p_run.add_argument("--config", required=True, help="path to a key-value config file")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="seed for randomized initial data")
    p_run.set_defaults(func=_cmd_run)

    p_verify = sub.add_parser("verify", help="run a verification suite")
    p_verify.add_argument("--suite", required=True, help="suite name")
    p_verify.set_defaults(func=_cmd_verify)

    p_info = sub.add_parser("snapshot-info", help="describe a snapshot file")
    p_info.add_argument("file")
    p_info.set_defaults(func=_cmd_snapshot_info)

    p_report = sub.add_parser("report", help="render figures from a run's diagnostics")
    p_report.add_argument("--run", required=True, help="run directory or diagnostics.csv path")
    p_report.add_argument("--out", default=None, help="directory for figures (default: alongside)")
    p_report.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
