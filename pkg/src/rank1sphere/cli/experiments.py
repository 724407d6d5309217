"""Experiment plans: configs become independent cells plus a deterministic merge."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import Dimensions, Hyperparams, generate_instance, make_rng
from ..gibbs import (GibbsOverlapOracle, GibbsParams, cumulative_trapezoid, estimate_matrix_mmse,
                     overlap_variance_diagnostic)
from ..spectral import top_singular_pair
from ..theory import (OracleContractError, PathMode, StateEvolutionOracle, closed_form_extremizer,
                      constant_oracle, integrate_interpolation_path, limit_mi, near_threshold,
                      scalar_channel_mi, theory_curve, verify_lemma1)
from ..theory.curves import THEORY_COLUMNS
from .config import (ConcentrationConfig, GibbsSpec, InterpolationPathConfig, Lemma1Config,
                     McSweepConfig, TheoryCurveConfig, ThermoConfig, ThetaSpec, expand)
from .runner import Cell

ESTIMATE_COLUMNS = ("lambda", "n", "estimator", "value", "std_error", "n_samples", "burn_in",
                    "seed", "warn_flags")
CONCENTRATION_COLUMNS = ("lambda", "n", "variance", "std_error", "reps", "seed")
LEMMA1_COLUMNS = ("n", "m", "mi_estimate", "std_error", "mi_limit", "samples", "seed")
PATH_COLUMNS = ("mode", "eps_u", "eps_v", "t", "r_u", "r_v", "r_u_prime", "r_v_prime")
THERMO_COLUMNS = ("lambda", "n", "integrand", "integrand_se", "mi", "mi_se", "mi_limit", "seed",
                  "warn_flags")


@dataclass(frozen=True)
class Plan:
    stem: str
    columns: tuple[str, ...]
    cells: list[Cell]
    assemble: Callable[[list[dict]], list[dict]]


def _theta(spec: ThetaSpec, lam: float) -> Hyperparams:
    return Hyperparams(lam, spec.alpha_u, spec.alpha_v, spec.rho_u, spec.rho_v)


def _gibbs_params(spec: GibbsSpec, theta: Hyperparams) -> GibbsParams:
    return GibbsParams(spec.burn_in, spec.n_samples, spec.thinning, spec.init).for_theta(theta)


def _flags(*groups) -> str:
    return ";".join(sorted({f for g in groups for f in g}))


def _spread(values: list[float]) -> float:
    return float(np.std(values, ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0


# cells run in worker processes, so they are plain module-level functions

def instance_cell(theta: Hyperparams, n: int, seed: int, k: int, estimators: tuple[str, ...],
                  params: GibbsParams | None, tol: float = 1e-10,
                  max_iter: int = 100_000) -> dict:
    """All requested estimators on instance ``k`` of ``seed`` at one ``(lam, n)``."""
    dims = Dimensions.from_ratios(n, theta.alpha_u, theta.alpha_v)
    inst = generate_instance(theta, dims, seed, k)
    out: dict = {}
    if "gibbs" in estimators:
        try:
            est = estimate_matrix_mmse(inst, params.burn_in, params.n_samples, params.thinning,
                                       rng=make_rng(seed, k, 1), init=params.init)
            out["gibbs"] = {"value": est.value, "std_error": est.std_error,
                            "flags": list(est.warn_flags)}
        except FloatingPointError as exc:
            out.update(failed=True, error=str(exc))
    if "spectral" in estimators:
        res = top_singular_pair(inst.y, tol, max_iter, make_rng(seed, k, 2), inst.u_true,
                                inst.v_true, raise_on_failure=False)
        out["spectral"] = {"value": res.q_u_sq * res.q_v_sq, "converged": res.converged}
        if not res.converged:
            out.update(failed=True, error=f"power iteration did not converge ({res.iters} iters)")
    return out


def concentration_cell(theta: Hyperparams, n: int, reps: int, params: GibbsParams,
                       seed: int) -> dict:
    try:
        row = overlap_variance_diagnostic(theta, [n], reps, params, seed)[0]
    except FloatingPointError as exc:
        return {"failed": True, "error": str(exc)}
    return {"variance": row.variance, "std_error": row.std_error}


def lemma1_cell(n: int, m: float, samples: int, seed: int) -> dict:
    mean, se = verify_lemma1(n, m, samples, seed)
    return {"mean": mean, "std_error": se}


def path_cell(theta: Hyperparams, mode: PathMode, eps: tuple[float, float],
              cfg: InterpolationPathConfig, seed: int) -> dict:
    if cfg.oracle == "constant":
        oracle = constant_oracle(cfg.oracle_value)
    elif cfg.oracle == "gibbs":
        g = cfg.gibbs
        oracle = GibbsOverlapOracle(theta, cfg.gibbs_n, GibbsParams(g.burn_in, g.n_samples,
                                    g.thinning, g.init), cfg.gibbs_reps, seed)
    else:
        oracle = StateEvolutionOracle(theta)
    m_u = cfg.m_u_const
    if mode is PathMode.LOWER_BOUND and m_u is None:
        m_u = closed_form_extremizer(theta).m_u_star
    try:
        path = integrate_interpolation_path(theta, eps, mode, oracle, m_u, cfg.steps)
    except OracleContractError as exc:
        return {"failed": True, "error": str(exc)}
    return {"t": path.grid.tolist(), "r_u": path.r_u.tolist(), "r_v": path.r_v.tolist(),
            "r_u_prime": path.r_u_prime.tolist(), "r_v_prime": path.r_v_prime.tolist()}


# plans

def plan_theory_curve(cfg: TheoryCurveConfig, seed: int) -> Plan:
    theta = _theta(cfg.theta, 1.0)
    return Plan("theory_curve", THEORY_COLUMNS, [],
                lambda _: theory_curve(theta, cfg.theta.lambdas()))


def plan_mc_sweep(cfg: McSweepConfig, seed: int) -> Plan:
    grid = [(lam, n) for lam in cfg.theta.lambdas() for n in cfg.n]
    estimators = tuple(dict.fromkeys(cfg.estimators))
    cells = []
    for i, (lam, n) in enumerate(grid):
        theta = _theta(cfg.theta, lam)
        params = _gibbs_params(cfg.gibbs, theta)
        for k in range(cfg.reps):
            cells.append(Cell(f"cell-{i:05d}-{k:05d}", instance_cell,
                              (theta, n, seed, k, estimators, params, cfg.spectral.tol,
                               cfg.spectral.max_iter)))

    def assemble(results: list[dict]) -> list[dict]:
        rows = []
        for i, (lam, n) in enumerate(grid):
            theta = _theta(cfg.theta, lam)
            params = _gibbs_params(cfg.gibbs, theta)
            chunk = results[i * cfg.reps:(i + 1) * cfg.reps]
            base = ["near_threshold"] if near_threshold(theta) else []
            for est in estimators:
                done = [r[est] for r in chunk if est in r]
                failed = ["not_converged"] if any(r.get("failed") for r in chunk) else []
                values = [d["value"] for d in done]
                if est == "gibbs":
                    flags = _flags(base, failed, *(d["flags"] for d in done))
                    se = _spread(values) if len(values) > 1 else (
                        done[0]["std_error"] if done else math.nan)
                    n_samples, burn_in = params.n_samples, params.burn_in
                else:
                    flags = _flags(base, failed)
                    se, n_samples, burn_in = _spread(values), 0, 0
                rows.append({"lambda": lam, "n": n, "estimator": est,
                             "value": float(np.mean(values)) if values else math.nan,
                             "std_error": se, "n_samples": n_samples, "burn_in": burn_in,
                             "seed": seed, "warn_flags": flags})
        return rows

    return Plan("mc_sweep", ESTIMATE_COLUMNS, cells, assemble)


def plan_concentration(cfg: ConcentrationConfig, seed: int) -> Plan:
    theta = _theta(cfg.theta, cfg.theta.lambdas()[0])
    params = _gibbs_params(cfg.gibbs, theta)
    cells = [Cell(f"cell-{n:07d}", concentration_cell, (theta, n, cfg.reps, params, seed))
             for n in cfg.n]

    def assemble(results: list[dict]) -> list[dict]:
        return [{"lambda": theta.lam, "n": n, "variance": r.get("variance", math.nan),
                 "std_error": r.get("std_error", math.nan), "reps": cfg.reps, "seed": seed}
                for n, r in zip(cfg.n, results)]

    return Plan("concentration", CONCENTRATION_COLUMNS, cells, assemble)


def plan_lemma1(cfg: Lemma1Config, seed: int) -> Plan:
    grid = [(n, m) for n in cfg.n for m in expand(cfg.m)]
    cells = [Cell(f"cell-{i:05d}", lemma1_cell, (n, m, cfg.samples, seed))
             for i, (n, m) in enumerate(grid)]

    def assemble(results: list[dict]) -> list[dict]:
        return [{"n": n, "m": m, "mi_estimate": r["mean"], "std_error": r["std_error"],
                 "mi_limit": scalar_channel_mi(m), "samples": cfg.samples, "seed": seed}
                for (n, m), r in zip(grid, results)]

    return Plan("lemma1", LEMMA1_COLUMNS, cells, assemble)


def plan_interp_path(cfg: InterpolationPathConfig, seed: int) -> Plan:
    theta = _theta(cfg.theta, cfg.theta.lambdas()[0])
    grid = [(PathMode(mode), tuple(eps)) for mode in cfg.modes for eps in cfg.epsilon]
    cells = [Cell(f"cell-{i:05d}", path_cell, (theta, mode, eps, cfg, seed))
             for i, (mode, eps) in enumerate(grid)]

    def assemble(results: list[dict]) -> list[dict]:
        rows = []
        for (mode, (eu, ev)), r in zip(grid, results):
            if r.get("failed"):
                continue
            for j, t in enumerate(r["t"]):
                rows.append({"mode": mode.value, "eps_u": eu, "eps_v": ev, "t": t,
                             "r_u": r["r_u"][j], "r_v": r["r_v"][j],
                             "r_u_prime": r["r_u_prime"][j], "r_v_prime": r["r_v_prime"][j]})
        return rows

    return Plan("interp_path", PATH_COLUMNS, cells, assemble)


def plan_thermo(cfg: ThermoConfig, seed: int) -> Plan:
    grid = cfg.theta.lambdas()
    cells = []
    for i, lam in enumerate(grid):
        theta = _theta(cfg.theta, lam)
        for k in range(cfg.reps):
            cells.append(Cell(f"cell-{i:05d}-{k:05d}", instance_cell,
                              (theta, cfg.n, seed, k, ("gibbs",), _gibbs_params(cfg.gibbs, theta))))

    def assemble(results: list[dict]) -> list[dict]:
        base = _theta(cfg.theta, 1.0)
        dims = Dimensions.from_ratios(cfg.n, base.alpha_u, base.alpha_v)
        scale = 0.5 * dims.n_u * dims.n_v / (dims.n * dims.n)
        integrand, integrand_se, flags = [], [], []
        for i, lam in enumerate(grid):
            chunk = results[i * cfg.reps:(i + 1) * cfg.reps]
            done = [r["gibbs"] for r in chunk if "gibbs" in r]
            values = [d["value"] for d in done]
            integrand.append(scale * float(np.mean(values)) if values else math.nan)
            integrand_se.append(scale * _spread(values) if values else math.nan)
            failed = ["not_converged"] if len(done) < len(chunk) else []
            near = ["near_threshold"] if near_threshold(base.with_lambda(lam)) else []
            flags.append(_flags(near, failed, *(d["flags"] for d in done)))
        mi, mi_se = cumulative_trapezoid(grid, integrand, integrand_se)
        return [{"lambda": lam, "n": cfg.n, "integrand": integrand[i],
                 "integrand_se": integrand_se[i], "mi": mi[i], "mi_se": mi_se[i],
                 "mi_limit": limit_mi(base.with_lambda(lam)), "seed": seed,
                 "warn_flags": flags[i]} for i, lam in enumerate(grid)]

    return Plan("thermo", THERMO_COLUMNS, cells, assemble)


PLANNERS = {
    "TheoryCurve": plan_theory_curve,
    "McSweep": plan_mc_sweep,
    "Concentration": plan_concentration,
    "Lemma1": plan_lemma1,
    "InterpolationPath": plan_interp_path,
    "ThermoIntegration": plan_thermo,
}
