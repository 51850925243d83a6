"""Monte Carlo comparison of ``Z = max_j S_nj`` with its Gaussian analogue."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import bounds
from ..errors import DomainError, ShapeError
from ..smoothmax import SmoothingParams
from . import ensembles
from .ensembles import DistributionSpec

N_THRESHOLDS = 201


def kolmogorov_distance(u, v) -> float:
    """Exact ``sup_t |F_u(t) - F_v(t)|`` for the two empirical CDFs."""
    u = np.sort(np.asarray(u, dtype=float).ravel())
    v = np.sort(np.asarray(v, dtype=float).ravel())
    if u.size == 0 or v.size == 0:
        raise ShapeError("both samples must be nonempty")
    # both ECDFs are right-continuous step functions; the sup is attained at a jump
    pts = np.concatenate([u, v])
    fu = np.searchsorted(u, pts, side="right") / u.size
    fv = np.searchsorted(v, pts, side="right") / v.size
    return float(np.max(np.abs(fu - fv)))


def ecdf(sample: np.ndarray, t) -> np.ndarray:
    s = np.sort(sample)
    return np.searchsorted(s, t, side="right") / s.size


@dataclass
class StrassenPoint:
    threshold: float
    lhs: float
    bound: float
    violated: bool


@dataclass
class ExperimentResult:
    """Paired draws of ``Z`` and ``Z_dagger`` and the empirical set-inequality check.

    ``strassen_grid`` holds, for ``A = (-inf, t]``,
    ``P(Z <= t) - P(Z_dagger <= t + radius)`` against the probability bound.
    """

    spec: DistributionSpec
    params: SmoothingParams
    reps: int
    seed: int
    z_samples: np.ndarray
    z_dagger_samples: np.ndarray
    kolmogorov: float
    report: bounds.BoundReport
    profile: bounds.MomentProfile
    strassen_grid: list = field(default_factory=list)

    @property
    def violations(self) -> int:
        return sum(p.violated for p in self.strassen_grid)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "params": self.params.to_dict(),
            "reps": self.reps,
            "seed": self.seed,
            "kolmogorov": self.kolmogorov,
            "violations": self.violations,
            "report": self.report.to_dict(),
            "profile": self.profile.to_dict(),
            "strassen_grid": [vars(p).copy() for p in self.strassen_grid],
            "z_samples": self.z_samples.tolist(),
            "z_dagger_samples": self.z_dagger_samples.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentResult":
        return cls(
            spec=DistributionSpec.from_dict(data["spec"]),
            params=SmoothingParams.from_dict(data["params"]),
            reps=data["reps"],
            seed=data["seed"],
            z_samples=np.asarray(data["z_samples"], dtype=float),
            z_dagger_samples=np.asarray(data["z_dagger_samples"], dtype=float),
            kolmogorov=data["kolmogorov"],
            report=bounds.BoundReport.from_dict(data["report"]),
            profile=bounds.MomentProfile.from_dict(data["profile"]),
            strassen_grid=[StrassenPoint(**p) for p in data["strassen_grid"]],
        )


def maxima(samples: np.ndarray) -> np.ndarray:
    """``max_j sum_i`` over a ``reps x n x d`` array."""
    return samples.sum(axis=1).max(axis=1)


def strassen_grid(z, z_dagger, radius, bound, n_thresholds=N_THRESHOLDS):
    pooled = np.concatenate([z, z_dagger])
    sd = pooled.std()
    thresholds = np.linspace(pooled.min() - sd, pooled.max() + sd, n_thresholds)
    lhs = ecdf(z, thresholds) - ecdf(z_dagger, thresholds + radius)
    return [StrassenPoint(float(t), float(v), float(bound), bool(v > bound)) for t, v in zip(thresholds, lhs)]


def run_experiment(spec: DistributionSpec, params: SmoothingParams, reps: int, seed: int,
                   workers: int = 1, profile: bounds.MomentProfile | None = None,
                   profile_reps: int | None = None) -> ExperimentResult:
    """Draw ``reps`` copies of ``Z`` and ``Z_dagger`` and check the set inequality.

    Unless ``profile`` is given, a fresh moment profile is estimated from
    ``profile_reps`` (default ``reps``) replications on separate streams.
    """
    if reps < 1000:
        raise DomainError("run_experiment needs reps >= 1000")
    if params.d != spec.d:
        raise DomainError(f"params.d = {params.d} but spec.d = {spec.d}")
    z = maxima(ensembles.sample_x(spec, reps, seed, workers))
    zd = maxima(ensembles.gaussian_analogue(spec, reps, seed, workers))
    if profile is None:
        profile = bounds.moment_profile(spec, params.iota, profile_reps or reps, seed, workers=workers)
    report = bounds.l_n(params, profile)
    grid = strassen_grid(z, zd, report.radius, report.prob_bound)
    return ExperimentResult(
        spec=spec,
        params=params,
        reps=reps,
        seed=seed,
        z_samples=z,
        z_dagger_samples=zd,
        kolmogorov=kolmogorov_distance(z, zd),
        report=report,
        profile=profile,
        strassen_grid=grid,
    )


def dkw_threshold(reps_u: int, reps_v: int, alpha: float = 1e-3) -> float:
    """Two-sample DKW threshold: each ECDF lies within
    ``sqrt(log(2/alpha) / (2m))`` of its CDF with probability ``1 - alpha``.
    Equal sizes give ``2 sqrt(log(2/alpha) / (2 reps))``."""
    c = math.log(2.0 / alpha) / 2.0
    return math.sqrt(c / reps_u) + math.sqrt(c / reps_v)
