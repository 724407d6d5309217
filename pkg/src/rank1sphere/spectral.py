"""Spectral baseline: top singular pair of ``Y / sqrt(n)`` by alternating power iteration."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class SpectralConvergenceError(RuntimeError):
    """Power iteration hit ``max_iter``; ``result`` holds the last iterate."""

    def __init__(self, result: "SpectralResult"):
        super().__init__(f"power iteration did not converge in {result.iters} iterations")
        self.result = result


@dataclass(frozen=True, eq=False)
class SpectralResult:
    sigma_1: float
    q_u_sq: float
    q_v_sq: float
    iters: int
    u_hat: np.ndarray
    v_hat: np.ndarray
    converged: bool = True


def squared_cosine(x: np.ndarray, y: np.ndarray) -> float:
    """``(x . y)^2 / (|x|^2 |y|^2)`` clipped to ``[0, 1]``; 0 if either vector vanishes."""
    nx, ny = float(x @ x), float(y @ y)
    if nx == 0 or ny == 0:
        return 0.0
    return float(min(max((x @ y) ** 2 / (nx * ny), 0.0), 1.0))


def _canonical_sign(x: np.ndarray) -> np.ndarray:
    # nonnegative inner product with e_1; fall back to the first nonzero entry
    nz = np.flatnonzero(x)
    return -x if nz.size and x[nz[0]] < 0 else x


def top_singular_pair(y: np.ndarray, tol: float = 1e-10, max_iter: int = 10_000,
                      rng: np.random.Generator | None = None, u_true: np.ndarray | None = None,
                      v_true: np.ndarray | None = None, n: int | None = None,
                      raise_on_failure: bool = True) -> SpectralResult:
    """Leading singular triple of ``Y / sqrt(n)`` (``n`` defaults to the row count).

    Iterates ``v <- Y^T Y v`` (as two matrix-vector products) from a seeded
    Gaussian start until successive Rayleigh quotients ``|Y v|^2`` differ by
    less than ``tol`` in relative terms. Overlaps with the truth are 0 when it
    is not supplied.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 2 or not np.all(np.isfinite(y)):
        raise ValueError("y must be a finite matrix")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if rng is None:
        rng = np.random.default_rng(0)
    scale = 1.0 / math.sqrt(n if n is not None else y.shape[0])

    v = rng.standard_normal(y.shape[1])
    v /= np.linalg.norm(v)
    rayleigh = 0.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        u = y @ v
        new_rayleigh = float(u @ u)
        w = y.T @ u
        norm = np.linalg.norm(w)
        if norm == 0:
            # y annihilates the iterate: y = 0 (or an exact null start)
            rayleigh, converged = 0.0, True
            break
        v = w / norm
        if abs(new_rayleigh - rayleigh) <= tol * max(new_rayleigh, 1e-300):
            rayleigh, converged = new_rayleigh, True
            break
        rayleigh = new_rayleigh

    u = y @ v
    sigma = float(np.linalg.norm(u))
    u_hat = _canonical_sign(u / sigma) if sigma > 0 else u
    v_hat = v
    if sigma > 0:
        # align v_hat with u_hat so that Y v_hat = sigma u_hat after the sign fix
        v_hat = v * np.sign(u_hat @ u) if u_hat @ u != 0 else v
    q_u = squared_cosine(u_hat, u_true) if u_true is not None else 0.0
    q_v = squared_cosine(v_hat, v_true) if v_true is not None else 0.0
    result = SpectralResult(sigma * scale, q_u, q_v, it, u_hat, v_hat, converged)
    if not converged and raise_on_failure:
        raise SpectralConvergenceError(result)
    return result
