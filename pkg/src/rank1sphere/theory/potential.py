"""Replica-symmetric potentials, their extremizers and the MMSE curve."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from ..core import Hyperparams

_BOX_SLACK = 1e-12


class Branch(str, enum.Enum):
    BELOW = "BelowThreshold"
    ABOVE = "AboveThreshold"


@dataclass(frozen=True)
class ExtremizerSolution:
    m_u_star: float
    m_v_star: float
    value: float
    branch: Branch
    converged: bool = True
    iterations: int = 0


def varphi(m: float) -> float:
    """``(m - ln(1 + m)) / 2``: free entropy gap of a Gaussian scalar channel."""
    if m < 0:
        raise ValueError(f"varphi needs m >= 0, got {m}")
    return 0.5 * (m - math.log1p(m))


def varphi_prime(m: float) -> float:
    return 0.5 * m / (1.0 + m)


def scalar_channel_mi(m: float) -> float:
    """High-dimensional mutual information per coordinate, ``ln(1 + m) / 2``."""
    if m < 0:
        raise ValueError(f"scalar_channel_mi needs m >= 0, got {m}")
    return 0.5 * math.log1p(m)


def _check_box(theta: Hyperparams, m_u: float, m_v: float) -> None:
    if not (-_BOX_SLACK <= m_u <= theta.rho_u + _BOX_SLACK):
        raise ValueError(f"m_u={m_u} outside [0, {theta.rho_u}]")
    if not (-_BOX_SLACK <= m_v <= theta.rho_v + _BOX_SLACK):
        raise ValueError(f"m_v={m_v} outside [0, {theta.rho_v}]")


def potential_i(theta: Hyperparams, m_u: float, m_v: float) -> float:
    """Mutual-information potential whose inf-sup is the limit of ``I / n``."""
    _check_box(theta, m_u, m_v)
    lam, au, av, ru, rv = theta.lam, theta.alpha_u, theta.alpha_v, theta.rho_u, theta.rho_v
    return (0.5 * lam * au * av * (ru - m_u) * (rv - m_v)
            + 0.5 * au * math.log1p(lam * av * ru * m_v)
            + 0.5 * av * math.log1p(lam * au * rv * m_u))


def potential_phi(theta: Hyperparams, m_u: float, m_v: float) -> float:
    """Free-entropy potential at unit SNR (``theta.lam`` is not used)."""
    _check_box(theta, m_u, m_v)
    au, av, ru, rv = theta.alpha_u, theta.alpha_v, theta.rho_u, theta.rho_v
    return (au * varphi(av * ru * m_v) + av * varphi(au * rv * m_u)
            - 0.5 * au * av * m_u * m_v)


def lambda_it(theta: Hyperparams) -> float:
    """Information-theoretic threshold ``1 / (rho_u rho_v sqrt(alpha_u alpha_v))``."""
    return 1.0 / (theta.rho_u * theta.rho_v * math.sqrt(theta.alpha_u * theta.alpha_v))


def closed_form_extremizer(theta: Hyperparams) -> ExtremizerSolution:
    lam, au, av, ru, rv = theta.lam, theta.alpha_u, theta.alpha_v, theta.rho_u, theta.rho_v
    if lam <= lambda_it(theta):
        return ExtremizerSolution(0.0, 0.0, potential_i(theta, 0.0, 0.0), Branch.BELOW)
    num = lam * lam * au * av * rv * rv * ru * ru - 1.0
    m_u = num / (lam * au * rv * (1.0 + lam * av * rv * ru))
    m_v = num / (lam * av * ru * (1.0 + lam * au * rv * ru))
    m_u = min(max(m_u, 0.0), ru)
    m_v = min(max(m_v, 0.0), rv)
    return ExtremizerSolution(m_u, m_v, potential_i(theta, m_u, m_v), Branch.ABOVE)


def limit_mmse(theta: Hyperparams) -> float:
    sol = closed_form_extremizer(theta)
    return theta.rho_u * theta.rho_v - sol.m_u_star * sol.m_v_star


def limit_mi(theta: Hyperparams) -> float:
    return closed_form_extremizer(theta).value


def stationarity_maps(theta: Hyperparams, m_u: float, m_v: float) -> tuple[float, float]:
    """State-evolution updates ``(f_u(m_v), f_v(m_u))``."""
    _check_box(theta, m_u, m_v)
    lam, au, av, ru, rv = theta.lam, theta.alpha_u, theta.alpha_v, theta.rho_u, theta.rho_v
    f_u = lam * av * ru * ru * m_v / (1.0 + lam * av * ru * m_v)
    f_v = lam * au * rv * rv * m_u / (1.0 + lam * au * rv * m_u)
    return f_u, f_v


def state_evolution_solve(theta: Hyperparams, init_m_v: float | None = None,
                          tol: float = 1e-12, max_iter: int = 10_000) -> ExtremizerSolution:
    """Iterate ``m_u <- f_u(m_v)``, ``m_v <- f_v(m_u)`` until ``|dm_v| < tol``.

    Both maps are increasing and concave, so from ``init_m_v > 0`` the iterates
    decrease monotonically onto the largest fixed point. If ``max_iter`` is hit
    the last iterate is returned with ``converged=False``.
    """
    if init_m_v is None:
        init_m_v = theta.rho_v
    if not (0 < init_m_v <= theta.rho_v):
        raise ValueError(f"init_m_v must lie in (0, {theta.rho_v}]")
    if tol <= 0:
        raise ValueError("tol must be positive")
    m_v = init_m_v
    m_u = 0.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        m_u, _ = stationarity_maps(theta, 0.0, m_v)
        _, new_m_v = stationarity_maps(theta, m_u, 0.0)
        delta = abs(new_m_v - m_v)
        m_v = new_m_v
        if delta < tol:
            converged = True
            break
    branch = Branch.ABOVE if theta.lam > lambda_it(theta) else Branch.BELOW
    return ExtremizerSolution(m_u, m_v, potential_i(theta, m_u, m_v), branch,
                              converged=converged, iterations=it)


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float,
                   n_grid: int = 64, max_iter: int = 500) -> float:
    """Minimize ``f`` on ``[lo, hi]``: coarse grid, then golden section on the
    bracket around the best grid node."""
    xs = [lo + (hi - lo) * k / (n_grid - 1) for k in range(n_grid)]
    fs = [f(x) for x in xs]
    k = min(range(n_grid), key=fs.__getitem__)
    a = xs[max(k - 1, 0)]
    b = xs[min(k + 1, n_grid - 1)]
    best_x, best_f = xs[k], fs[k]
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    for x in (a, b, c, d):
        fx = f(x)
        if fx < best_f:
            best_x, best_f = x, fx
    return best_x


def inner_argmax_m_v(theta: Hyperparams, m_u: float) -> float:
    """Unique maximizer of the strictly concave ``m_v -> i(m_u, m_v)``."""
    lam, av, ru, rv = theta.lam, theta.alpha_v, theta.rho_u, theta.rho_v
    if lam == 0:
        return 0.0
    denom = lam * av * ru * (ru - m_u)
    if denom <= 0 or m_u >= rv * denom:
        return rv
    return max(m_u / denom, 0.0)


def grad_m_u_potential_i(theta: Hyperparams, m_u: float, m_v: float) -> float:
    lam, au, av, rv = theta.lam, theta.alpha_u, theta.alpha_v, theta.rho_v
    return -0.5 * lam * au * av * (rv - m_v) + 0.5 * av * lam * au * rv / (1.0 + lam * au * rv * m_u)


def infsup_solve_numeric(theta: Hyperparams, tol: float = 1e-10) -> ExtremizerSolution:
    """``inf_{m_u} sup_{m_v} i(m_u, m_v)`` with analytic inner step and
    grid-guarded golden-section outer step.

    Golden section stalls near ``sqrt(machine eps)`` on a flat minimum, so the
    result is polished by bracketing a sign change of the outer derivative,
    which by the envelope theorem is ``di/dm_u`` at the inner maximizer.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")

    def outer(m_u: float) -> float:
        return potential_i(theta, m_u, inner_argmax_m_v(theta, m_u))

    def slope(m_u: float) -> float:
        return grad_m_u_potential_i(theta, m_u, inner_argmax_m_v(theta, m_u))

    m_u = golden_section(outer, 0.0, theta.rho_u, tol)
    step = theta.rho_u / 63
    hi = min(m_u + step, theta.rho_u)
    # the slope vanishes identically at m_u = 0; probe just inside the box
    lo = max(m_u - step, 1e-9 * theta.rho_u)
    if lo < hi and slope(lo) < 0.0 < slope(hi):
        m_u = brentq(slope, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        # at the threshold the minimum is flat at 0 and the bracket probe can win
        if outer(0.0) <= outer(m_u):
            m_u = 0.0
    elif m_u - step <= 0.0 and slope(lo) >= 0.0:
        m_u = 0.0
    m_v = inner_argmax_m_v(theta, m_u)
    branch = Branch.ABOVE if m_u > max(10 * tol, 1e-8 * theta.rho_u) else Branch.BELOW
    return ExtremizerSolution(m_u, m_v, potential_i(theta, m_u, m_v), branch)


def supinf_phi_numeric(theta: Hyperparams, tol: float = 1e-10) -> ExtremizerSolution:
    """``sup_{m_u} inf_{m_v} phi(m_u, m_v)`` at unit SNR.

    The inner problem is convex with stationary point
    ``m_u / (alpha_v rho_u (rho_u - m_u))``, clipped to ``rho_v``.
    """
    unit = theta.with_lambda(1.0)

    def outer(m_u: float) -> float:
        return -potential_phi(theta, m_u, inner_argmax_m_v(unit, m_u))

    m_u = golden_section(outer, 0.0, theta.rho_u, tol)
    m_v = inner_argmax_m_v(unit, m_u)
    branch = Branch.ABOVE if m_u > max(10 * tol, 1e-8 * theta.rho_u) else Branch.BELOW
    return ExtremizerSolution(m_u, m_v, potential_phi(theta, m_u, m_v), branch)


def near_threshold(theta: Hyperparams, rel: float = 0.1) -> bool:
    return abs(theta.lam - lambda_it(theta)) <= rel * lambda_it(theta)


def i_mmse_consistency(theta: Hyperparams, dlambda: float = 1e-4) -> float:
    """``|d/dlam inf-sup i - (alpha_u alpha_v / 2) * limit_mmse|`` by central
    differences.

    Away from the threshold the residual is ``O(dlambda**2)``; at the threshold
    itself the second derivative jumps and only ``O(dlambda)`` is expected.
    """
    if dlambda <= 0 or theta.lam - dlambda <= 0:
        raise ValueError("need 0 < dlambda < lam")
    hi = limit_mi(theta.with_lambda(theta.lam + dlambda))
    lo = limit_mi(theta.with_lambda(theta.lam - dlambda))
    slope = (hi - lo) / (2.0 * dlambda)
    return abs(slope - 0.5 * theta.alpha_u * theta.alpha_v * limit_mmse(theta))
