"""Command-line experiment runner.

Exit codes: 0 success or all comparisons pass, 1 comparison failures,
2 configuration error, 3 numerical convergence failure (partial results written).
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

from .. import __version__
from ..theory.curves import write_csv
from .compare import CompareError, compare_files, write_report
from .config import U64_MAX, ConfigError, config_hash, load_config
from .experiments import PLANNERS
from .runner import clear_checkpoints, run_cells

EXIT_OK, EXIT_COMPARE_FAIL, EXIT_CONFIG, EXIT_CONVERGENCE = 0, 1, 2, 3

SUBCOMMANDS = {
    "theory-curve": "TheoryCurve",
    "mc-sweep": "McSweep",
    "concentration": "Concentration",
    "lemma1": "Lemma1",
    "interp-path": "InterpolationPath",
    "thermo": "ThermoIntegration",
}


def _versions() -> dict[str, str]:
    out = {"rank1sphere": __version__, "python": platform.python_version()}
    for pkg in ("numpy", "scipy", "pydantic"):
        out[pkg] = metadata.version(pkg)
    return out


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def run_experiment(command: str, config_path: str, seed: int | None = None,
                   out: str | None = None, jobs: int | None = None) -> int:
    """Run one experiment subcommand; returns the process exit code."""
    try:
        cfg = load_config(config_path)
        expected = SUBCOMMANDS[command]
        if cfg.kind != expected:
            raise ConfigError([f"{config_path}: kind: '{command}' expects kind {expected!r}, "
                               f"got {cfg.kind!r}"])
        if seed is not None:
            cfg = cfg.model_copy(update={"seed": seed})
        if cfg.seed is None:
            raise ConfigError([f"{config_path}: seed: required (in the config or via --seed)"])
    except ConfigError as exc:
        for line in exc.diagnostics:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(out or cfg.output or "results")
    n_jobs = jobs or cfg.jobs or os.cpu_count() or 1
    digest = config_hash(cfg)
    plan = PLANNERS[cfg.kind](cfg, cfg.seed)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"cannot create output directory {out_dir}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    ckpt = out_dir / ".checkpoints" / f"{plan.stem}-{digest[:16]}"

    start = time.perf_counter()
    results = run_cells(plan.cells, n_jobs, ckpt if plan.cells else None)
    rows = plan.assemble(results)
    failed = [{"cell": c.key, "error": r.get("error", "")}
              for c, r in zip(plan.cells, results) if r.get("failed")]
    csv_path = out_dir / f"{plan.stem}.csv"
    write_csv(csv_path, plan.columns, rows)
    manifest = {
        "config_hash": digest,
        "seed": cfg.seed,
        "versions": _versions(),
        "wall_time_s": time.perf_counter() - start,
        "command": command,
        "config": cfg.model_dump(mode="json", exclude={"jobs", "output"}),
        "csv": csv_path.name,
        "status": "convergence_failure" if failed else "ok",
        "failed_cells": failed,
    }
    (out_dir / f"{plan.stem}.manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    if failed:
        # keep checkpoints of the cells that did finish for a retry
        print(f"{len(failed)} cell(s) failed to converge; partial results in {csv_path}",
              file=sys.stderr)
        return EXIT_CONVERGENCE
    clear_checkpoints(ckpt)
    print(f"wrote {csv_path}", file=sys.stderr)
    return EXIT_OK


def run_compare(args: argparse.Namespace) -> int:
    try:
        report = compare_files(args.theory_csv, args.mc_csv, args.abs_tol, args.k_sigma,
                               args.estimator)
    except CompareError as exc:
        print(f"compare error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for row in report:
        status = "PASS" if row["pass"] else "FAIL"
        print(f"{status} lambda={row['lambda']:.6g} n={row['n']} {row['estimator']}: "
              f"|{row['value']:.6g} - {row['theory']:.6g}| = {row['diff']:.3g}, "
              f"allowed {row['allowed']:.3g}, margin {row['margin']:.3g}")
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_report(out_dir / "compare.csv", report)
    n_fail = sum(not r["pass"] for r in report)
    print(f"{len(report) - n_fail}/{len(report)} rows pass", file=sys.stderr)
    return EXIT_OK if n_fail == 0 else EXIT_COMPARE_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rank1sphere", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, kind in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run a {kind} experiment")
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=_u64, help="override the config seed")
        p.add_argument("--out", help="output directory (default: config 'output' or ./results)")
        p.add_argument("--jobs", type=_positive, help="worker processes (default: all cores)")
    p = sub.add_parser("compare", help="check MC estimates against a theory curve")
    p.add_argument("theory_csv")
    p.add_argument("mc_csv")
    p.add_argument("--abs-tol", type=float, default=0.05)
    p.add_argument("--k-sigma", type=float, default=3.0,
                   help="allowed deviation in standard errors")
    p.add_argument("--estimator", default="gibbs",
                   help="MMSE estimator rows to compare, or 'all' (default: gibbs)")
    p.add_argument("--out", help="also write compare.csv to this directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors, matching the config-error code
        return int(exc.code or 0)
    if args.command == "compare":
        return run_compare(args)
    return run_experiment(args.command, args.config, args.seed, args.out, args.jobs)


if __name__ == "__main__":
    sys.exit(main())
