"""Theory curves along a grid of SNR values, with CSV export."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

from ..core import Hyperparams
from .potential import closed_form_extremizer

THEORY_COLUMNS = ("lambda", "m_u_star", "m_v_star", "mi_limit", "mmse_limit", "branch")


def fmt(x: float) -> str:
    """Full double precision, 17 significant digits."""
    return format(float(x), ".17g")


def theory_curve(theta: Hyperparams, lambdas: Iterable[float]) -> list[dict]:
    rows = []
    for lam in lambdas:
        sol = closed_form_extremizer(theta.with_lambda(float(lam)))
        rows.append({
            "lambda": float(lam),
            "m_u_star": sol.m_u_star,
            "m_v_star": sol.m_v_star,
            "mi_limit": sol.value,
            "mmse_limit": theta.rho_u * theta.rho_v - sol.m_u_star * sol.m_v_star,
            "branch": sol.branch.value,
        })
    return rows


def write_csv(path: Path | str, columns: Sequence[str], rows: Iterable[dict]) -> None:
    """Write rows with floats at 17 significant digits and ``\\n`` line endings."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(row[c]) if isinstance(row[c], float) else row[c]
                             for c in columns])
