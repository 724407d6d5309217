"""Exact posterior sampling and Monte Carlo estimators for finite instances."""

from .estimators import (GibbsOverlapOracle, GibbsParams, MmseEstimate, ReplicaCheck, ThermoRow,
                         VarianceRow, batch_means, cumulative_trapezoid, estimate_matrix_mmse, estimate_mmse,
                         gauge_fixed_overlap, integrated_autocorr_time, nishimori_check,
                         overlap_variance_diagnostic, thermo_integration_mi)
from .sampler import (ChainTrace, GibbsChain, PosteriorModel, gibbs_step, interpolated_model,
                      run_chain, stack_models)
from .vmf import sample_vmf

__all__ = [
    "ChainTrace", "GibbsChain", "GibbsOverlapOracle", "GibbsParams", "MmseEstimate",
    "PosteriorModel", "ReplicaCheck", "ThermoRow", "VarianceRow", "batch_means", "cumulative_trapezoid",
    "estimate_matrix_mmse", "estimate_mmse", "gauge_fixed_overlap", "gibbs_step",
    "integrated_autocorr_time", "interpolated_model", "nishimori_check",
    "overlap_variance_diagnostic", "run_chain", "sample_vmf", "stack_models",
    "thermo_integration_mi",
]
