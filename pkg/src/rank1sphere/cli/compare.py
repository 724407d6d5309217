"""Per-lambda comparison of Monte Carlo estimates against a theory curve.

A row passes when ``|value - theory| <= max(abs_tol, k * std_error)``; the
reported margin is ``|value - theory| - allowed`` (positive means failure).
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

from ..theory.curves import write_csv

# spectral rows hold the squared-cosine overlap product, which has no theory column
MMSE_ESTIMATORS = frozenset({"gibbs"})

REPORT_COLUMNS = ("lambda", "n", "estimator", "theory", "value", "std_error", "diff", "allowed",
                  "margin", "result")


class CompareError(ValueError):
    """Unreadable inputs or misaligned lambda grids."""


def _read(path: Path | str) -> list[dict]:
    try:
        with open(path, newline="") as fh:
            return list(csv.DictReader(fh))
    except OSError as exc:
        raise CompareError(f"cannot read {path}: {exc.strerror}") from exc


def _find(lam: float, grid: list[float]) -> int | None:
    for i, x in enumerate(grid):
        if abs(x - lam) <= 1e-12 * max(1.0, abs(lam)):
            return i
    return None


def compare_rows(theory: list[dict], mc: list[dict], abs_tol: float = 0.05, k: float = 3.0,
                 estimator: str = "gibbs") -> list[dict]:
    if abs_tol < 0 or k < 0:
        raise CompareError("abs_tol and k must be nonnegative")
    if not theory or "lambda" not in theory[0] or "mmse_limit" not in theory[0]:
        raise CompareError("theory table needs 'lambda' and 'mmse_limit' columns")
    if not mc or "lambda" not in mc[0]:
        raise CompareError("estimate table needs a 'lambda' column")
    if "value" not in mc[0]:
        if "mmse_limit" not in mc[0]:
            raise CompareError("estimate table needs 'value' (or 'mmse_limit') column")
        mc = [dict(r, value=r["mmse_limit"], std_error="0", estimator="theory") for r in mc]
    elif "estimator" in mc[0]:
        if estimator not in MMSE_ESTIMATORS and estimator != "all":
            raise CompareError(f"estimator {estimator!r} does not estimate the MMSE; "
                               f"choose one of {sorted(MMSE_ESTIMATORS)} or 'all'")
        wanted = MMSE_ESTIMATORS if estimator == "all" else {estimator}
        mc = [r for r in mc if r["estimator"] in wanted]
        if not mc:
            raise CompareError(f"no rows with estimator {estimator!r}")
    grid = [float(r["lambda"]) for r in theory]
    report = []
    for r in mc:
        lam = float(r["lambda"])
        i = _find(lam, grid)
        if i is None:
            raise CompareError(f"grid mismatch: lambda={lam!r} not on the theory grid")
        target = float(theory[i]["mmse_limit"])
        value, se = float(r["value"]), float(r.get("std_error") or 0.0)
        diff = abs(value - target)
        allowed = max(abs_tol, k * se)
        ok = not math.isnan(diff) and diff <= allowed
        report.append({"lambda": lam, "n": r.get("n", ""), "estimator": r.get("estimator", ""),
                       "theory": target, "value": value, "std_error": se, "diff": diff,
                       "allowed": allowed, "margin": diff - allowed, "pass": ok,
                       "result": "pass" if ok else "fail"})
    return report


def compare_files(theory_csv, mc_csv, abs_tol: float = 0.05, k: float = 3.0,
                  estimator: str = "gibbs") -> list[dict]:
    return compare_rows(_read(theory_csv), _read(mc_csv), abs_tol, k, estimator)


def write_report(path: Path | str, report: list[dict]) -> None:
    write_csv(path, REPORT_COLUMNS, report)
