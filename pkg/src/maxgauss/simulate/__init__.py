"""Sampling, Monte Carlo experiments and the Lindeberg swap decomposition."""

from .ensembles import (
    DistributionSpec,
    gaussian_analogue,
    replication_rng,
    sample_x,
)
from .experiment import (
    ExperimentResult,
    StrassenPoint,
    dkw_threshold,
    kolmogorov_distance,
    run_experiment,
)
from .lindeberg import LindebergDecomposition, enumerated_profile, lindeberg_decompose

__all__ = [
    "DistributionSpec",
    "ExperimentResult",
    "LindebergDecomposition",
    "StrassenPoint",
    "dkw_threshold",
    "enumerated_profile",
    "gaussian_analogue",
    "kolmogorov_distance",
    "lindeberg_decompose",
    "replication_rng",
    "run_experiment",
    "sample_x",
]
