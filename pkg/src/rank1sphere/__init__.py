"""Rank-one nonsymmetric matrix estimation with spherical priors.

Asymptotic theory (potentials, extremizers, MMSE curve), an exact Gibbs
sampler for finite instances, a spectral baseline and an experiment runner.
"""

from .core import (Dimensions, Hyperparams, ProblemInstance, generate_instance, make_rng,
                   sample_spherical)

__version__ = "0.1.0"

__all__ = ["Dimensions", "Hyperparams", "ProblemInstance", "generate_instance", "make_rng",
           "sample_spherical", "__version__"]
