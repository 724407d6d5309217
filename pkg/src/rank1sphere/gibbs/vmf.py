"""Exact von Mises-Fisher sampling on the unit sphere (Wood's rejection scheme).

The cosine ``w = mu . x`` is drawn by rejection from a beta envelope, then a
uniform tangent direction orthogonal to ``mu`` completes the sample.
"""

from __future__ import annotations

import numpy as np


def _sample_cosines(dim: int, kappa: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    d1 = dim - 1.0
    # b = d1 / (2 kappa + sqrt(4 kappa^2 + d1^2)), stable for large kappa
    b = d1 / (2.0 * kappa + np.sqrt(4.0 * kappa * kappa + d1 * d1))
    x0 = (1.0 - b) / (1.0 + b)
    log_one_minus_x0_sq = np.log(4.0 * b) - 2.0 * np.log1p(b)
    c = kappa * x0 + d1 * log_one_minus_x0_sq

    w = np.empty_like(kappa)
    pending = np.arange(kappa.size)
    while pending.size:
        z = rng.beta(d1 / 2.0, d1 / 2.0, size=pending.size)
        bp = b[pending]
        cand = (1.0 - (1.0 + bp) * z) / (1.0 - (1.0 - bp) * z)
        log_u = np.log(rng.random(pending.size))
        with np.errstate(divide="ignore"):
            accept = (kappa[pending] * cand + d1 * np.log1p(-x0[pending] * cand)
                      - c[pending]) >= log_u
        w[pending[accept]] = cand[accept]
        pending = pending[~accept]
    return w


def sample_vmf(direction: np.ndarray, kappa, rng: np.random.Generator) -> np.ndarray:
    """Draw from the density proportional to ``exp(kappa * direction . x)``.

    ``direction`` is a unit vector of shape ``(dim,)`` or a batch ``(k, dim)``
    with ``kappa`` scalar or shape ``(k,)``; the output matches ``direction``.
    """
    direction = np.asarray(direction, dtype=float)
    single = direction.ndim == 1
    mu = np.atleast_2d(direction)
    k, dim = mu.shape
    if dim < 2:
        raise ValueError("vMF sampling needs dim >= 2")
    kappa = np.broadcast_to(np.asarray(kappa, dtype=float), (k,)).copy()
    if not np.all(np.isfinite(kappa)):
        raise ValueError("kappa must be finite")
    if np.any(kappa < 0):
        raise ValueError("kappa must be nonnegative")
    norms = np.linalg.norm(mu, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-10):
        raise ValueError("direction must be a unit vector")

    w = _sample_cosines(dim, kappa, rng)
    tangent = rng.standard_normal((k, dim))
    tangent -= np.sum(tangent * mu, axis=1, keepdims=True) * mu
    tnorm = np.linalg.norm(tangent, axis=1, keepdims=True)
    tangent /= np.where(tnorm > 0, tnorm, 1.0)
    x = w[:, None] * mu + np.sqrt(np.clip(1.0 - w * w, 0.0, None))[:, None] * tangent
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x[0] if single else x
