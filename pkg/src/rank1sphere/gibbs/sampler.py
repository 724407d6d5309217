"""Alternating von Mises-Fisher Gibbs sampler for the spherical rank-one posterior.

On the product of spheres the quadratic terms of the Hamiltonian are constant,
so the posterior is proportional to ``exp(u^T W v + h_u . u + h_v . v)``. Each
conditional is then von Mises-Fisher: ``u | v`` has natural parameter
``W v + h_u`` and ``v | u`` has ``W^T u + h_v``. For the plain observation model
``W = sqrt(lam / n) Y`` and the fields vanish; the interpolating model adds
Gaussian side observations of ``U`` and ``V``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import Dimensions, Hyperparams, ProblemInstance, make_rng, sample_spherical
from .vmf import sample_vmf

NORM_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class PosteriorModel:
    """Couplings of a posterior on the spheres, plus the planted signal.

    ``w`` is ``(n_u, n_v)`` for one posterior shared by every chain, or
    ``(k, n_u, n_v)`` for a stack of ``k`` posteriors with one chain each; the
    fields and planted vectors then carry the same leading axis.
    """

    theta: Hyperparams
    dims: Dimensions
    w: np.ndarray
    h_u: np.ndarray
    h_v: np.ndarray
    u_true: np.ndarray
    v_true: np.ndarray

    @property
    def radius_u(self) -> float:
        return math.sqrt(self.theta.rho_u * self.dims.n_u)

    @property
    def radius_v(self) -> float:
        return math.sqrt(self.theta.rho_v * self.dims.n_v)

    @classmethod
    def from_instance(cls, inst: ProblemInstance) -> "PosteriorModel":
        w = math.sqrt(inst.theta.lam / inst.dims.n) * inst.y
        return cls(inst.theta, inst.dims, w, np.zeros(inst.dims.n_u), np.zeros(inst.dims.n_v),
                   inst.u_true, inst.v_true)

    @property
    def stacked(self) -> bool:
        return self.w.ndim == 3


def stack_models(models: list[PosteriorModel | ProblemInstance]) -> PosteriorModel:
    """Stack posteriors sharing ``theta`` and ``dims`` for one-chain-per-posterior runs."""
    models = [PosteriorModel.from_instance(m) if isinstance(m, ProblemInstance) else m
              for m in models]
    first = models[0]
    if any(m.theta != first.theta or m.dims != first.dims for m in models):
        raise ValueError("stacked posteriors must share theta and dims")
    return PosteriorModel(first.theta, first.dims,
                          np.stack([m.w for m in models]),
                          np.stack([np.broadcast_to(m.h_u, (first.dims.n_u,)) for m in models]),
                          np.stack([np.broadcast_to(m.h_v, (first.dims.n_v,)) for m in models]),
                          np.stack([m.u_true for m in models]),
                          np.stack([m.v_true for m in models]))


def interpolated_model(theta: Hyperparams, dims: Dimensions, t: float,
                       r: tuple[float, float], seed: int, stream: int = 0) -> PosteriorModel:
    """Draw an instance of the interpolating observation model at ``(t, R)``.

    ``Y_t = sqrt(lam (1 - t) / n) U V^T + Z``, ``Y_u = sqrt(lam alpha_v R_v) U + Z'``,
    ``Y_v = sqrt(lam alpha_u R_u) V + Z''``.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    r_u, r_v = r
    rng = make_rng(seed, stream)
    u = sample_spherical(dims.n_u, theta.rho_u, rng)
    v = sample_spherical(dims.n_v, theta.rho_v, rng)
    a = math.sqrt(theta.lam * (1.0 - t) / dims.n)
    s_u = math.sqrt(theta.lam * theta.alpha_v * r_v)
    s_v = math.sqrt(theta.lam * theta.alpha_u * r_u)
    y = a * np.outer(u, v) + rng.standard_normal((dims.n_u, dims.n_v))
    y_u = s_u * u + rng.standard_normal(dims.n_u)
    y_v = s_v * v + rng.standard_normal(dims.n_v)
    return PosteriorModel(theta, dims, a * y, s_u * y_u, s_v * y_v, u, v)


@dataclass(eq=False)
class GibbsChain:
    """A batch of independent chains on one posterior.

    ``u`` has shape ``(n_chains, n_u)`` and ``v`` shape ``(n_chains, n_v)``.
    """

    model: PosteriorModel
    u: np.ndarray
    v: np.ndarray
    rng: np.random.Generator
    step_count: int = 0

    @classmethod
    def start(cls, model: PosteriorModel | ProblemInstance, rng: np.random.Generator,
              n_chains: int = 1, init: str = "random") -> "GibbsChain":
        """``init="random"`` draws from the prior; ``"planted"`` starts at the
        ground truth, which is an exact posterior draw in the Bayes-optimal setting."""
        if isinstance(model, ProblemInstance):
            model = PosteriorModel.from_instance(model)
        th, dims = model.theta, model.dims
        if model.stacked:
            n_chains = model.w.shape[0]
        if init == "random":
            u = sample_spherical(dims.n_u, th.rho_u, rng, size=n_chains)
            v = sample_spherical(dims.n_v, th.rho_v, rng, size=n_chains)
        elif init == "planted":
            u = np.array(np.broadcast_to(model.u_true, (n_chains, dims.n_u)))
            v = np.array(np.broadcast_to(model.v_true, (n_chains, dims.n_v)))
        else:
            raise ValueError(f"unknown init {init!r}")
        return cls(model, u, v, rng)

    @property
    def n_chains(self) -> int:
        return self.u.shape[0]

    def overlaps(self) -> tuple[np.ndarray, np.ndarray]:
        """``(Q_u, Q_v)`` of every chain against the planted signal."""
        m = self.model
        q_u = np.sum(self.u * m.u_true, axis=-1) / m.dims.n_u
        q_v = np.sum(self.v * m.v_true, axis=-1) / m.dims.n_v
        return (np.clip(q_u, -m.theta.rho_u, m.theta.rho_u),
                np.clip(q_v, -m.theta.rho_v, m.theta.rho_v))

    def flipped(self) -> "GibbsChain":
        """Copy with the global sign symmetry ``(u, v) -> (-u, -v)`` applied."""
        return GibbsChain(self.model, -self.u, -self.v, self.rng, self.step_count)


def _vmf_update(field_: np.ndarray, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Draw ``x`` on the sphere of given radius with density ``~ exp(field . x)``, row-wise."""
    norm = np.linalg.norm(field_, axis=1)
    degenerate = norm == 0
    direction = np.where(degenerate[:, None], 0.0, field_ / np.where(degenerate, 1.0, norm)[:, None])
    direction[degenerate, 0] = 1.0
    kappa = norm * radius
    return radius * sample_vmf(direction, kappa, rng)


def gibbs_step(chain: GibbsChain) -> GibbsChain:
    """One sweep, ``u`` then ``v``; updates ``chain`` in place and returns it."""
    m = chain.model
    if m.stacked:
        field_u = np.einsum("kij,kj->ki", m.w, chain.v) + m.h_u
    else:
        field_u = chain.v @ m.w.T + m.h_u
    chain.u = _vmf_update(field_u, m.radius_u, chain.rng)
    if m.stacked:
        field_v = np.einsum("kij,ki->kj", m.w, chain.u) + m.h_v
    else:
        field_v = chain.u @ m.w + m.h_v
    chain.v = _vmf_update(field_v, m.radius_v, chain.rng)
    for x, r in ((chain.u, m.radius_u), (chain.v, m.radius_v)):
        norms = np.linalg.norm(x, axis=1)
        if np.any(np.abs(norms / r - 1.0) > NORM_RTOL):
            raise FloatingPointError("chain left the sphere")
        x *= (r / norms)[:, None]
    chain.step_count += 1
    return chain


@dataclass(frozen=True, eq=False)
class ChainTrace:
    """Overlap samples, shape ``(n_samples, n_chains)``."""

    q_u: np.ndarray
    q_v: np.ndarray
    burn_in: int
    thinning: int


def run_chain(chain: GibbsChain, burn_in: int, n_samples: int, thinning: int = 1) -> ChainTrace:
    if burn_in < 0 or n_samples < 1 or thinning < 1:
        raise ValueError("need burn_in >= 0, n_samples >= 1, thinning >= 1")
    for _ in range(burn_in):
        gibbs_step(chain)
    q_u = np.empty((n_samples, chain.n_chains))
    q_v = np.empty((n_samples, chain.n_chains))
    for s in range(n_samples):
        for _ in range(thinning):
            gibbs_step(chain)
        q_u[s], q_v[s] = chain.overlaps()
    return ChainTrace(q_u, q_v, burn_in, thinning)
