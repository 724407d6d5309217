"""Log-space modified Bessel functions and exact sphere log-partitions.

``ln I_nu(x)`` uses the ascending series below ``x = 20`` and the uniform
large-order (Debye) expansion above it. The Debye terms are written in
``s = sqrt(nu^2 + x^2)`` so that ``nu = 0`` needs no special case.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, logsumexp

SERIES_CUTOFF = 20.0
_SERIES_TERMS = 120

# Debye polynomials u_k(p) = sum_j c[k][j] p^j / denom[k]
_DEBYE = [
    ({0: 1.0}, 1.0),
    ({1: 3.0, 3: -5.0}, 24.0),
    ({2: 81.0, 4: -462.0, 6: 385.0}, 1152.0),
    ({3: 30375.0, 5: -369603.0, 7: 765765.0, 9: -425425.0}, 414720.0),
    ({4: 4465125.0, 6: -94121676.0, 8: 349922430.0, 10: -446185740.0,
      12: 185910725.0}, 39813120.0),
    ({5: 1519035525.0, 7: -49286948607.0, 9: 284499769554.0, 11: -614135872350.0,
      13: 566098157625.0, 15: -188699385875.0}, 6688604160.0),
    ({6: 2757049477875.0, 8: -127577298354750.0, 10: 1050760774457901.0,
      12: -3369032068261860.0, 14: 5104696716244125.0, 16: -3685299006138750.0,
      18: 1023694168371875.0}, 4815794995200.0),
]


def _log_iv_series(nu: float, x: np.ndarray) -> np.ndarray:
    k = np.arange(_SERIES_TERMS, dtype=float)[:, None]
    with np.errstate(divide="ignore"):
        log_half = np.log(x / 2.0)[None, :]
    terms = (2.0 * k + nu) * log_half - gammaln(k + 1.0) - gammaln(k + nu + 1.0)
    return logsumexp(terms, axis=0)


def _log_iv_debye(nu: float, x: np.ndarray) -> np.ndarray:
    s = np.sqrt(nu * nu + x * x)
    eta = s + (nu * np.log(x / (nu + s)) if nu > 0 else 0.0)
    total = np.zeros_like(x)
    for k, (coeffs, denom) in enumerate(_DEBYE):
        # u_k(p) / nu^k with p = nu / s, expanded as sum_j c_j nu^(j-k) / s^j
        term = np.zeros_like(x)
        for j, c in coeffs.items():
            term += c * (nu ** (j - k)) / s ** j
        total += term / denom
    return eta - 0.5 * math.log(2.0 * math.pi) - 0.5 * np.log(s) + np.log(total)


def log_bessel_i(nu: float, x) -> np.ndarray | float:
    """``ln I_nu(x)`` for ``nu >= 0`` (or ``nu = -1/2``) and ``x >= 0``."""
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.isnan(x)) or math.isnan(nu):
        raise ValueError("NaN argument to log_bessel_i")
    if np.any(x < 0):
        raise ValueError("log_bessel_i needs x >= 0")
    out = np.empty_like(x)
    if nu == -0.5:
        # I_{-1/2}(x) = sqrt(2 / (pi x)) cosh(x)
        with np.errstate(divide="ignore"):
            out = (0.5 * np.log(2.0 / (math.pi * x)) + x
                   + np.log1p(np.exp(-2.0 * x)) - math.log(2.0))
    else:
        if nu < 0:
            raise ValueError(f"order must be >= 0 or -1/2, got {nu}")
        small = x < SERIES_CUTOFF
        if np.any(small):
            out[small] = _log_iv_series(nu, x[small])
        if np.any(~small):
            out[~small] = _log_iv_debye(nu, x[~small])
    return float(out[0]) if scalar else out


def log_partition_from_kappa(dim: int, kappa) -> np.ndarray | float:
    """``ln E exp(kappa * mu . x)`` for ``x`` uniform on the unit sphere in
    ``R^dim``: ``ln Gamma(nu + 1) + nu ln(2 / kappa) + ln I_nu(kappa)``."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    scalar = np.ndim(kappa) == 0
    kappa = np.atleast_1d(np.asarray(kappa, dtype=float))
    if np.any(np.isnan(kappa)):
        raise ValueError("NaN kappa")
    out = np.zeros_like(kappa)
    pos = kappa > 0
    if dim == 1:
        k = kappa[pos]
        out[pos] = k + np.log1p(np.exp(-2.0 * k)) - math.log(2.0)  # ln cosh
    else:
        nu = dim / 2.0 - 1.0
        k = kappa[pos]
        out[pos] = gammaln(nu + 1.0) + nu * np.log(2.0 / k) + log_bessel_i(nu, k)
    return float(out[0]) if scalar else out


def log_partition_sphere(dim: int, radius_sq_density: float, c) -> float:
    """``ln ∫ dP(x) exp(c . x)`` over the uniform sphere of radius
    ``sqrt(radius_sq_density * dim)``."""
    c = np.asarray(c, dtype=float)
    if c.shape != (dim,):
        raise ValueError(f"c must have shape ({dim},), got {c.shape}")
    if np.any(np.isnan(c)) or math.isnan(radius_sq_density):
        raise ValueError("NaN input to log_partition_sphere")
    kappa = float(np.linalg.norm(c)) * math.sqrt(radius_sq_density * dim)
    return log_partition_from_kappa(dim, kappa)
