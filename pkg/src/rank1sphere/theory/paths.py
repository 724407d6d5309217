"""Adaptive interpolation paths as solutions of first-order ODEs in ``R = (R_u, R_v)``.

Two modes:

* ``LOWER_BOUND``: ``R' = (m_u, F_v(t, R))`` with a constant ``m_u``.
* ``UPPER_BOUND``: ``R' = (F_u(t, R), F_v(t, R))`` with
  ``F_u = 2 rho_u varphi'(lam alpha_v rho_u F_v)``.

``F_v(t, R) = E<Q_v>_{t,R}`` is supplied by an overlap oracle. The side
channels carry SNR ``lam * alpha * R`` so that ``lam = 1`` recovers the
unit-SNR convention.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..core import Hyperparams
from .potential import varphi_prime

OverlapOracle = Callable[[float, tuple[float, float]], float]

_ORACLE_SLACK = 1e-12


class PathMode(str, enum.Enum):
    LOWER_BOUND = "LowerBound"
    UPPER_BOUND = "UpperBound"


class OracleContractError(ValueError):
    def __init__(self, t: float, value: float, bound: float):
        super().__init__(f"overlap oracle returned {value!r} at t={t!r}, outside [0, {bound}]")
        self.t = t
        self.value = value


@dataclass(frozen=True, eq=False)
class InterpolationPath:
    epsilon: tuple[float, float]
    mode: PathMode
    grid: np.ndarray
    r_u: np.ndarray
    r_v: np.ndarray
    r_u_prime: np.ndarray
    r_v_prime: np.ndarray

    def check_invariants(self, rho_u: float, rho_v: float, atol: float = 1e-12) -> list[str]:
        """Return a list of violated invariants (empty when the path is valid)."""
        problems = []
        if abs(self.r_u[0] - self.epsilon[0]) > atol or abs(self.r_v[0] - self.epsilon[1]) > atol:
            problems.append("initial condition")
        if np.any(self.r_u_prime < -atol) or np.any(self.r_u_prime > rho_u + atol):
            problems.append("r_u' outside [0, rho_u]")
        if np.any(self.r_v_prime < -atol) or np.any(self.r_v_prime > rho_v + atol):
            problems.append("r_v' outside [0, rho_v]")
        if np.any(np.diff(self.r_u) < -atol) or np.any(np.diff(self.r_v) < -atol):
            problems.append("path not nondecreasing")
        eu, ev = self.epsilon
        if not (eu - atol <= self.r_u[-1] <= eu + rho_u + atol
                and ev - atol <= self.r_v[-1] <= ev + rho_v + atol):
            problems.append("R(1) outside [eps, eps + rho]")
        return problems


def integrate_interpolation_path(theta: Hyperparams, epsilon: Sequence[float],
                                 mode: PathMode | str, overlap_oracle: OverlapOracle,
                                 m_u_const: float | None = None,
                                 steps: int = 200) -> InterpolationPath:
    """Classical fixed-step RK4 on ``t in [0, 1]`` with ``steps`` intervals."""
    mode = PathMode(mode)
    eps_u, eps_v = (float(e) for e in epsilon)
    if eps_u < 0 or eps_v < 0:
        raise ValueError("epsilon must be componentwise >= 0")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if mode is PathMode.LOWER_BOUND:
        if m_u_const is None or not (0 <= m_u_const <= theta.rho_u):
            raise ValueError("LowerBound mode needs m_u_const in [0, rho_u]")

    def f_v(t: float, r: np.ndarray) -> float:
        value = float(overlap_oracle(t, (float(r[0]), float(r[1]))))
        if not (-_ORACLE_SLACK <= value <= theta.rho_v + _ORACLE_SLACK) or math.isnan(value):
            raise OracleContractError(t, value, theta.rho_v)
        return min(max(value, 0.0), theta.rho_v)

    def rhs(t: float, r: np.ndarray) -> np.ndarray:
        fv = f_v(t, r)
        if mode is PathMode.LOWER_BOUND:
            fu = m_u_const
        else:
            fu = 2.0 * theta.rho_u * varphi_prime(theta.lam * theta.alpha_v * theta.rho_u * fv)
        return np.array([fu, fv])

    grid = np.linspace(0.0, 1.0, steps + 1)
    h = 1.0 / steps
    r = np.empty((steps + 1, 2))
    dr = np.empty((steps + 1, 2))
    r[0] = (eps_u, eps_v)
    for k in range(steps):
        t = grid[k]
        k1 = rhs(t, r[k])
        dr[k] = k1
        k2 = rhs(t + h / 2, r[k] + h / 2 * k1)
        k3 = rhs(t + h / 2, r[k] + h / 2 * k2)
        k4 = rhs(t + h, r[k] + h * k3)
        r[k + 1] = r[k] + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    dr[steps] = rhs(grid[steps], r[steps])
    return InterpolationPath((eps_u, eps_v), mode, grid, r[:, 0].copy(), r[:, 1].copy(),
                             dr[:, 0].copy(), dr[:, 1].copy())


def paths_non_crossing(lower: InterpolationPath, upper: InterpolationPath,
                       atol: float = 1e-12) -> bool:
    """``eps <= eps'`` componentwise should give ``R(t, eps) <= R(t, eps')`` at every node."""
    return bool(np.all(lower.r_u <= upper.r_u + atol) and np.all(lower.r_v <= upper.r_v + atol))


class StateEvolutionOracle:
    """Replica-symmetric surrogate for ``E<Q_v>_{t,R}``.

    Solves the coupled scalar-channel fixed point

        q_u = g_u(lam alpha_v ((1 - t) q_v + R_v)),
        q_v = g_v(lam alpha_u ((1 - t) q_u + R_u)),

    with ``g(s) = rho^2 s / (1 + rho s)`` the overlap of a spherical (asymptotically
    Gaussian) signal seen at SNR ``s``, iterating down from ``(rho_u, rho_v)``.
    """

    def __init__(self, theta: Hyperparams, tol: float = 1e-14, max_iter: int = 100_000):
        self.theta = theta
        self.tol = tol
        self.max_iter = max_iter

    def overlaps(self, t: float, r: tuple[float, float]) -> tuple[float, float]:
        th = self.theta
        r_u, r_v = r
        q_u, q_v = th.rho_u, th.rho_v
        for _ in range(self.max_iter):
            s_u = th.lam * th.alpha_v * ((1.0 - t) * q_v + r_v)
            new_q_u = th.rho_u ** 2 * s_u / (1.0 + th.rho_u * s_u)
            s_v = th.lam * th.alpha_u * ((1.0 - t) * new_q_u + r_u)
            new_q_v = th.rho_v ** 2 * s_v / (1.0 + th.rho_v * s_v)
            done = abs(new_q_v - q_v) < self.tol and abs(new_q_u - q_u) < self.tol
            q_u, q_v = new_q_u, new_q_v
            if done:
                break
        return q_u, q_v

    def __call__(self, t: float, r: tuple[float, float]) -> float:
        return self.overlaps(t, r)[1]


def constant_oracle(value: float) -> OverlapOracle:
    return lambda t, r: value
