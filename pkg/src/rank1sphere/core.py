"""Hyperparameters, spherical signals and noisy rank-one observations.

The observation model is ``Y = sqrt(lam / n) * U V^T + Z`` with ``U`` uniform on
the sphere of radius ``sqrt(rho_u * n_u)``, ``V`` uniform on the sphere of
radius ``sqrt(rho_v * n_v)`` and ``Z`` standard Gaussian.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np


@dataclass(frozen=True)
class Hyperparams:
    """Problem vector ``(lam, alpha_u, alpha_v, rho_u, rho_v)``.

    ``lam`` may be zero (pure-noise observations); every other field must be
    strictly positive and finite.
    """

    lam: float
    alpha_u: float = 1.0
    alpha_v: float = 1.0
    rho_u: float = 1.0
    rho_v: float = 1.0

    def __post_init__(self) -> None:
        for name in ("alpha_u", "alpha_v", "rho_u", "rho_v"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lam must be nonnegative and finite, got {self.lam!r}")

    def with_lambda(self, lam: float) -> "Hyperparams":
        return Hyperparams(lam, self.alpha_u, self.alpha_v, self.rho_u, self.rho_v)

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class Dimensions:
    n: int
    n_u: int
    n_v: int

    def __post_init__(self) -> None:
        if self.n < 1 or self.n_u < 1 or self.n_v < 1:
            raise ValueError(f"dimensions must be >= 1, got {self}")

    @classmethod
    def from_ratios(cls, n: int, alpha_u: float, alpha_v: float) -> "Dimensions":
        """``n_u = round(alpha_u * n)``, ``n_v = round(alpha_v * n)``, floored at 1."""
        return cls(n, max(1, round(alpha_u * n)), max(1, round(alpha_v * n)))

    @property
    def ratio_u(self) -> float:
        return self.n_u / self.n

    @property
    def ratio_v(self) -> float:
        return self.n_v / self.n


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator keyed by ``seed`` and an optional stream index.

    Workers that own distinct ``stream`` tuples draw from disjoint streams, so
    results do not depend on scheduling.
    """
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *stream])))


def sample_spherical(dim: int, radius_sq_density: float, rng: np.random.Generator,
                     size: int | None = None) -> np.ndarray:
    """Uniform draw from the sphere of radius ``sqrt(radius_sq_density * dim)``.

    With ``size`` given, returns ``size`` independent rows.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if not (radius_sq_density > 0 and math.isfinite(radius_sq_density)):
        raise ValueError(f"radius_sq_density must be positive, got {radius_sq_density}")
    shape = (dim,) if size is None else (size, dim)
    x = rng.standard_normal(shape)
    norm = np.linalg.norm(x, axis=-1, keepdims=True)
    # a zero Gaussian vector has probability zero, but guard the division anyway
    while np.any(norm == 0):
        bad = (norm == 0)[..., 0]
        x[bad] = rng.standard_normal((int(bad.sum()), dim))
        norm = np.linalg.norm(x, axis=-1, keepdims=True)
    return x * (math.sqrt(radius_sq_density * dim) / norm)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    dims: Dimensions
    theta: Hyperparams
    u_true: np.ndarray
    v_true: np.ndarray
    y: np.ndarray
    seed: int
    stream: int = 0

    def record(self) -> dict[str, Any]:
        """JSON-safe description; the arrays are regenerated from the seed."""
        return {"theta": self.theta.to_dict(), "dims": asdict(self.dims), "seed": self.seed,
                "stream": self.stream}

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "ProblemInstance":
        return generate_instance(Hyperparams(**record["theta"]), Dimensions(**record["dims"]),
                                 int(record["seed"]), int(record.get("stream", 0)))


def generate_instance(theta: Hyperparams, dims: Dimensions, seed: int,
                      stream: int = 0) -> ProblemInstance:
    """Draw ``(U, V, Y)`` from a generator keyed by ``(seed, stream)``.

    U, V and Z are drawn in a fixed order regardless of ``theta.lam``, so the
    same seed at different SNRs gives common random numbers.
    """
    rng = make_rng(seed, stream)
    u = sample_spherical(dims.n_u, theta.rho_u, rng)
    v = sample_spherical(dims.n_v, theta.rho_v, rng)
    z = rng.standard_normal((dims.n_u, dims.n_v))
    y = math.sqrt(theta.lam / dims.n) * np.outer(u, v) + z
    return ProblemInstance(dims, theta, u, v, y, seed, stream)
