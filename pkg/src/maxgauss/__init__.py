"""Gaussian approximation bounds for maxima of sums of heavy-tailed random vectors."""

from .errors import DomainError, InfeasibleError, MaxGaussError, ShapeError
from .smoothmax import SmoothingParams, psi, psi_grad, psi_hessian, psi_third, f_third_sum
from .smoother import BorelSet, SmoothIndicator, build_g, certify_bounds, enlarge, g_eval
from .bounds import BoundReport, MomentProfile, epsilon_of, l_n, lemma3_bound, moment_profile
from .simulate import DistributionSpec, kolmogorov_distance, lindeberg_decompose, run_experiment

__version__ = "0.1.0"
