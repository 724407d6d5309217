"""Monte Carlo estimators built on the Gibbs sampler.

The matrix MMSE is estimated from ground-truth overlaps: in the Bayes-optimal
setting the planted signal is exchangeable with a posterior draw, so
``E||E[UV^T|Y]||^2 / (n_u n_v) = E<Q_u Q_v>`` and

    MMSE = rho_u rho_v - E<Q_u Q_v>.

The product ``Q_u Q_v`` is invariant under the global flip ``(u, v) -> (-u, -v)``,
so the estimator does not care which sign sector a chain settles in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ..core import Dimensions, Hyperparams, ProblemInstance, generate_instance, make_rng
from ..theory.potential import near_threshold
from .sampler import (GibbsChain, PosteriorModel, gibbs_step, interpolated_model, run_chain,
                      stack_models)

N_BATCHES = 20


@dataclass(frozen=True)
class GibbsParams:
    burn_in: int = 500
    n_samples: int = 4000
    thinning: int = 2
    init: str = "random"

    def __post_init__(self) -> None:
        if self.burn_in < 0 or self.n_samples < 1 or self.thinning < 1:
            raise ValueError(f"invalid Gibbs parameters {self}")
        if self.n_samples < N_BATCHES:
            raise ValueError(f"n_samples must be >= {N_BATCHES} for batch means")

    def for_theta(self, theta: Hyperparams) -> "GibbsParams":
        """Double the burn-in within 10% of the threshold, where mixing slows."""
        return replace(self, burn_in=2 * self.burn_in) if near_threshold(theta) else self


@dataclass(frozen=True)
class MmseEstimate:
    value: float
    std_error: float
    n_samples: int
    burn_in: int
    warn_flags: tuple[str, ...] = ()
    per_instance: tuple[float, ...] = field(default=(), repr=False)


def integrated_autocorr_time(x: np.ndarray, c: float = 5.0) -> float:
    """Integrated autocorrelation time with Sokal's self-consistent window."""
    x = np.asarray(x, dtype=float)
    n = x.size
    x = x - x.mean()
    var = x.var()
    if n < 2 or var == 0:
        return 1.0
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, nfft)
    acf = np.fft.irfft(f * np.conj(f), nfft)[:n] / (var * n)
    tau = 2.0 * np.cumsum(acf) - 1.0
    window = np.arange(n) >= c * tau
    m = int(np.argmax(window)) if window.any() else n - 1
    return float(max(tau[m], 1.0))


def batch_means(x: np.ndarray, n_batches: int = N_BATCHES) -> tuple[float, float]:
    """Mean and batch-means standard error of a time series."""
    x = np.asarray(x, dtype=float)
    b = x.size // n_batches
    if b < 1:
        raise ValueError("series shorter than the number of batches")
    means = x[: b * n_batches].reshape(n_batches, b).mean(axis=1)
    return float(x.mean()), float(means.std(ddof=1) / math.sqrt(n_batches))


def _mixing_flags(series: np.ndarray, n_samples: int) -> tuple[str, ...]:
    taus = [integrated_autocorr_time(series[:, k]) for k in range(series.shape[1])]
    return ("slow_mixing",) if max(taus) > n_samples / 10 else ()


def estimate_matrix_mmse(instance: ProblemInstance | PosteriorModel, burn_in: int = 500,
                         n_samples: int = 4000, thinning: int = 2,
                         rng: np.random.Generator | None = None,
                         init: str = "random") -> MmseEstimate:
    """``rho_u rho_v - mean_s(q_u q_v)`` on one instance, batch-means error bar."""
    if burn_in < 1 or n_samples < 1:
        raise ValueError("burn_in and n_samples must be >= 1")
    if rng is None:
        rng = make_rng(getattr(instance, "seed", 0), 1)
    chain = GibbsChain.start(instance, rng, init=init)
    trace = run_chain(chain, burn_in, n_samples, thinning)
    prod = trace.q_u * trace.q_v
    mean, se = batch_means(prod.mean(axis=1))
    th = chain.model.theta
    return MmseEstimate(th.rho_u * th.rho_v - mean, se, n_samples, burn_in,
                        _mixing_flags(prod, n_samples))


def estimate_mmse(theta: Hyperparams, dims: Dimensions, seed: int, reps: int = 8,
                  params: GibbsParams = GibbsParams(), first_stream: int = 0) -> MmseEstimate:
    """Matrix MMSE averaged over ``reps`` independent instances.

    Instance ``k`` uses stream ``first_stream + k`` of ``seed``; chains for all
    instances run side by side. With ``reps >= 2`` the error bar is the spread
    across instances, which includes the instance-to-instance fluctuation.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    instances = [generate_instance(theta, dims, seed, first_stream + k) for k in range(reps)]
    chain = GibbsChain.start(stack_models(instances), make_rng(seed, 2**32 + first_stream),
                             init=params.init)
    trace = run_chain(chain, params.burn_in, params.n_samples, params.thinning)
    prod = trace.q_u * trace.q_v
    rr = theta.rho_u * theta.rho_v
    per_instance = rr - prod.mean(axis=0)
    if reps == 1:
        value, se = batch_means(prod[:, 0])
        value = rr - value
    else:
        value = float(per_instance.mean())
        se = float(per_instance.std(ddof=1) / math.sqrt(reps))
    return MmseEstimate(value, se, params.n_samples, params.burn_in,
                        _mixing_flags(prod, params.n_samples), tuple(per_instance.tolist()))


@dataclass(frozen=True)
class VarianceRow:
    n: int
    variance: float
    std_error: float


def gauge_fixed_overlap(q_u: np.ndarray, q_v: np.ndarray) -> np.ndarray:
    """``sign(Q_u) Q_v``: invariant under the global sign flip."""
    return np.where(q_u >= 0, 1.0, -1.0) * q_v


def overlap_variance_diagnostic(theta: Hyperparams, n_list: Sequence[int], reps: int,
                                params: GibbsParams = GibbsParams(), seed: int = 0
                                ) -> list[VarianceRow]:
    """``V(n) = E<(Q_v - E<Q_v>)^2>`` pooled over ``reps`` instances per ``n``.

    The posterior is symmetric under the global flip, so ``Q_v`` is gauge-fixed
    by the sign of ``Q_u`` before taking moments.
    """
    if reps < 4:
        raise ValueError("reps must be >= 4")
    rows = []
    for n in n_list:
        if n < 50:
            raise ValueError("each n must be >= 50")
        dims = Dimensions.from_ratios(n, theta.alpha_u, theta.alpha_v)
        instances = [generate_instance(theta, dims, seed, 1000 * n + k) for k in range(reps)]
        chain = GibbsChain.start(stack_models(instances), make_rng(seed, 2**33 + n),
                                 init=params.init)
        trace = run_chain(chain, params.burn_in, params.n_samples, params.thinning)
        g = gauge_fixed_overlap(trace.q_u, trace.q_v)
        dev2 = (g - g.mean()) ** 2
        per_instance = dev2.mean(axis=0)
        rows.append(VarianceRow(n, float(per_instance.mean()),
                                float(per_instance.std(ddof=1) / math.sqrt(reps))))
    return rows


@dataclass(frozen=True)
class ReplicaCheck:
    planted: float
    planted_se: float
    replica: float
    replica_se: float


def nishimori_check(theta: Hyperparams, dims: Dimensions, reps: int,
                    params: GibbsParams = GibbsParams(), seed: int = 0) -> ReplicaCheck:
    """Compare ``E<Q_u Q_v>`` against the two-replica ``E<Q_u^12 Q_v^12>``.

    Two independent chains run on each instance; replica overlaps are taken
    between them. Both products are flip-invariant.
    """
    instances = [generate_instance(theta, dims, seed, k) for k in range(reps)]
    models = [PosteriorModel.from_instance(i) for i in instances for _ in range(2)]
    chain = GibbsChain.start(stack_models(models), make_rng(seed, 2**34), init=params.init)
    for _ in range(params.burn_in):
        gibbs_step(chain)
    planted = np.zeros((params.n_samples, reps))
    replica = np.zeros((params.n_samples, reps))
    for s in range(params.n_samples):
        for _ in range(params.thinning):
            gibbs_step(chain)
        q_u, q_v = chain.overlaps()
        planted[s] = 0.5 * (q_u[0::2] * q_v[0::2] + q_u[1::2] * q_v[1::2])
        r_u = np.sum(chain.u[0::2] * chain.u[1::2], axis=1) / dims.n_u
        r_v = np.sum(chain.v[0::2] * chain.v[1::2], axis=1) / dims.n_v
        replica[s] = r_u * r_v
    p_inst, r_inst = planted.mean(axis=0), replica.mean(axis=0)
    k = math.sqrt(reps)
    return ReplicaCheck(float(p_inst.mean()), float(p_inst.std(ddof=1) / k),
                        float(r_inst.mean()), float(r_inst.std(ddof=1) / k))


@dataclass(frozen=True)
class ThermoRow:
    lam: float
    integrand: float
    integrand_se: float
    mi: float
    mi_se: float
    warn_flags: tuple[str, ...] = ()


def thermo_integration_mi(theta: Hyperparams, n: int, lambda_grid: Sequence[float],
                          params: GibbsParams = GibbsParams(), seed: int = 0,
                          reps: int = 4) -> list[ThermoRow]:
    """Cumulative trapezoid of ``(n_u n_v / n^2) MMSE(lam) / 2`` along ``lambda_grid``.

    The same ``reps`` instances (fixed U, V, Z) are reused at every grid point.
    Error bars add in quadrature across grid points.
    """
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.size == 0 or grid[0] != 0.0:
        raise ValueError("lambda grid must start at 0")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("lambda grid must be strictly increasing")
    dims = Dimensions.from_ratios(n, theta.alpha_u, theta.alpha_v)
    scale = dims.n_u * dims.n_v / (dims.n * dims.n)
    integrand, integrand_se, flags = [], [], []
    for lam in grid:
        th = theta.with_lambda(float(lam))
        est = estimate_mmse(th, dims, seed, reps, params.for_theta(th))
        integrand.append(0.5 * scale * est.value)
        integrand_se.append(0.5 * scale * est.std_error)
        flags.append(est.warn_flags)
    return [ThermoRow(float(lam), integrand[k], integrand_se[k], mi, mi_se, flags[k])
            for k, (lam, mi, mi_se) in enumerate(zip(grid, *cumulative_trapezoid(
                grid, integrand, integrand_se)))]


def cumulative_trapezoid(grid: Sequence[float], values: Sequence[float],
                         std_errors: Sequence[float]) -> tuple[list[float], list[float]]:
    """Running trapezoid integral and its standard error, assuming independent nodes."""
    grid = np.asarray(grid, dtype=float)
    se = np.asarray(std_errors, dtype=float)
    weights = np.zeros(grid.size)
    total, integrals, errors = 0.0, [], []
    for k in range(grid.size):
        if k > 0:
            h = grid[k] - grid[k - 1]
            total += 0.5 * h * (values[k] + values[k - 1])
            weights[k - 1] += 0.5 * h
            weights[k] = 0.5 * h
        integrals.append(float(total))
        errors.append(math.sqrt(float(np.sum((weights[: k + 1] * se[: k + 1]) ** 2))))
    return integrals, errors


class GibbsOverlapOracle:
    """Plug-in ``F_v(t, R) = E<Q_v>_{t,R}`` for the interpolation ODE.

    Chains start at the planted signal (an exact posterior draw), so the sign
    sector is the one selected by the side observations. The average is over
    ``reps`` instances of the interpolating model, clipped to ``[0, rho_v]``.
    """

    def __init__(self, theta: Hyperparams, n: int, params: GibbsParams = GibbsParams(
            burn_in=20, n_samples=200, thinning=1, init="planted"), reps: int = 4, seed: int = 0):
        self.theta = theta
        self.dims = Dimensions.from_ratios(n, theta.alpha_u, theta.alpha_v)
        self.params = params
        self.reps = reps
        self.seed = seed
        self.calls = 0

    def __call__(self, t: float, r: tuple[float, float]) -> float:
        self.calls += 1
        models = [interpolated_model(self.theta, self.dims, t, r, self.seed,
                                     self.calls * 10_000 + k) for k in range(self.reps)]
        chain = GibbsChain.start(stack_models(models), make_rng(self.seed, 2**35 + self.calls),
                                 init=self.params.init)
        trace = run_chain(chain, self.params.burn_in, self.params.n_samples, self.params.thinning)
        return float(np.clip(trace.q_v.mean(), 0.0, self.theta.rho_v))
