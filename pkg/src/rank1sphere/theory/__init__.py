"""Closed-form asymptotics, variational solvers, exact sphere log-partitions and
interpolation paths."""

from .bessel import log_bessel_i, log_partition_from_kappa, log_partition_sphere
from .curves import THEORY_COLUMNS, theory_curve, write_csv
from .paths import (InterpolationPath, OracleContractError, PathMode, StateEvolutionOracle,
                    constant_oracle, integrate_interpolation_path, paths_non_crossing)
from .potential import (Branch, ExtremizerSolution, closed_form_extremizer,
                        i_mmse_consistency, infsup_solve_numeric, inner_argmax_m_v,
                        lambda_it, limit_mi, limit_mmse, near_threshold, potential_i,
                        potential_phi, scalar_channel_mi, state_evolution_solve,
                        stationarity_maps, supinf_phi_numeric, varphi, varphi_prime)
from .scalar_channel import verify_lemma1

__all__ = [
    "Branch", "ExtremizerSolution", "InterpolationPath", "OracleContractError", "PathMode",
    "StateEvolutionOracle", "THEORY_COLUMNS", "closed_form_extremizer", "constant_oracle",
    "i_mmse_consistency", "infsup_solve_numeric", "inner_argmax_m_v",
    "integrate_interpolation_path", "lambda_it", "limit_mi", "limit_mmse",
    "log_bessel_i", "log_partition_from_kappa", "log_partition_sphere", "near_threshold",
    "paths_non_crossing", "potential_i", "potential_phi", "scalar_channel_mi",
    "state_evolution_solve", "stationarity_maps", "supinf_phi_numeric", "theory_curve",
    "varphi", "varphi_prime", "verify_lemma1", "write_csv",
]
