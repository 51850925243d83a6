"""Quantities entering the Gaussian approximation bound for maxima.

The bound holds up to an unspecified universal constant; every number here
is the unscaled expression, i.e. the constant is taken to be one.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .simulate import ensembles
from .simulate.ensembles import DistributionSpec, gaussian_abs_moment
from .smoothmax import SmoothingParams, _epsilon

CONSTANT_NOTE = "up to a universal constant (taken as 1)"
SOURCES = ("analytic", "monte_carlo", "enumerate")


def epsilon_of(params: SmoothingParams) -> float:
    """``gamma delta exp(-(gamma^2 delta^2 - 1)/2)``, strictly inside (0, 1)."""
    if not params.gamma * params.delta > 1.0:
        raise DomainError("gamma*delta must exceed 1")
    return _epsilon(params.gamma, params.delta)


def lemma3_bound(a, x, iota):
    """Return ``(min(a + x + x^2, x^3), 3 a^((1 - iota)/3) x^(2 + iota))``.

    The first never exceeds the second when ``a >= 1``, ``x >= 0`` and
    ``0 <= iota <= 1``.  Arrays broadcast.
    """
    a, x, iota = (np.asarray(v, dtype=float) for v in (a, x, iota))
    if np.any(~(a >= 1)) or np.any(~(x >= 0)) or np.any(~((iota >= 0) & (iota <= 1))):
        raise DomainError("need a >= 1, x >= 0 and iota in [0, 1]")
    lhs = np.minimum(a + x + x * x, x**3)
    rhs = 3.0 * a ** ((1.0 - iota) / 3.0) * x ** (2.0 + iota)
    if lhs.ndim == 0:
        return float(lhs), float(rhs)
    return lhs, rhs


@dataclass(frozen=True)
class MomentProfile:
    """Moment functionals of the summands and their Gaussian analogues.

    ``third_max_x`` estimates ``E max_j sum_i |X_ij|^3`` (likewise for Y) and
    ``c_sum`` estimates ``sum_i E(max_j |X_ij|^q + max_j |Y_ij|^q)`` with
    ``q = 2 + iota``.  Each carries a standard error, zero for exact sources.
    """

    third_max_x: float
    third_max_y: float
    c_sum: float
    n: int
    d: int
    iota: float
    source: str = "analytic"
    third_max_x_se: float = 0.0
    third_max_y_se: float = 0.0
    c_sum_se: float = 0.0
    reps: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.source not in SOURCES:
            raise DomainError(f"unknown profile source {self.source!r}")
        for name in ("third_max_x", "third_max_y", "c_sum", "third_max_x_se", "third_max_y_se", "c_sum_se"):
            v = float(getattr(self, name))
            if math.isnan(v) or v < 0:
                raise DomainError(f"{name} must be nonnegative, got {v}")
            object.__setattr__(self, name, v)
        if self.source != "monte_carlo" and (self.third_max_x_se or self.third_max_y_se or self.c_sum_se):
            raise DomainError("exact profiles carry zero standard errors")
        if not 0.0 <= float(self.iota) <= 1.0:
            raise DomainError("iota must lie in [0, 1]")
        object.__setattr__(self, "iota", float(self.iota))

    @classmethod
    def zero(cls, n: int, d: int, iota: float) -> "MomentProfile":
        return cls(0.0, 0.0, 0.0, n, d, iota)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "MomentProfile":
        return cls(**data)


@dataclass(frozen=True)
class BoundReport:
    epsilon: float
    c_gamma: float
    term1: float
    term2: float
    l_n: float
    radius: float
    prob_bound: float
    term1_se: float = 0.0
    term2_se: float = 0.0
    l_n_se: float = 0.0
    clipped: bool = False
    note: str = CONSTANT_NOTE

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "BoundReport":
        return cls(**data)


def _scaled(factor, value, se):
    # 0 * inf would be nan; an absent moment contributes nothing
    if value == 0.0:
        return 0.0, 0.0
    if math.isinf(value):
        return math.inf, 0.0
    return factor * value, factor * se


def l_n(params: SmoothingParams, profile: MomentProfile) -> BoundReport:
    """Both branches of the bound, their minimum, the radius and the probability bound."""
    if not math.isclose(profile.iota, params.iota, rel_tol=0, abs_tol=1e-12):
        raise DomainError(f"profile iota {profile.iota} differs from params iota {params.iota}")
    if profile.d != params.d:
        raise DomainError(f"profile d {profile.d} differs from params d {params.d}")
    gamma, delta, iota = params.gamma, params.delta, params.iota
    eps = epsilon_of(params)
    third = profile.third_max_x + profile.third_max_y
    third_se = math.hypot(profile.third_max_x_se, profile.third_max_y_se)
    term1, term1_se = _scaled(gamma**2 / delta, third, third_se)
    f2 = gamma ** ((4.0 + 2.0 * iota) / 3.0) * delta ** (-(2.0 + iota) / 3.0)
    term2, term2_se = _scaled(f2, profile.c_sum, profile.c_sum_se)
    if term1 <= term2:
        ln, ln_se = term1, term1_se
    else:
        ln, ln_se = term2, term2_se
    raw = (eps + ln) / (1.0 - eps)
    return BoundReport(
        epsilon=eps,
        c_gamma=params.c_gamma,
        term1=term1,
        term2=term2,
        l_n=ln,
        radius=params.c_gamma + 3.0 * delta,
        prob_bound=min(1.0, raw),
        term1_se=term1_se,
        term2_se=term2_se,
        l_n_se=ln_se,
        clipped=raw > 1.0,
    )


def _analytic_profile(spec: DistributionSpec, iota: float) -> MomentProfile:
    if spec.d != 1:
        raise DomainError("analytic moments exist only for d = 1; use monte_carlo")
    q = 2.0 + iota
    sd = math.sqrt(spec.x_covariance()[0, 0])
    # X_i1 = sd * xi with xi a standardized coordinate
    x3 = spec.abs_moment(3.0) * sd**3
    xq = spec.abs_moment(q) * sd**q
    y3 = gaussian_abs_moment(3.0, sd)
    yq = gaussian_abs_moment(q, sd)
    return MomentProfile(
        third_max_x=spec.n * x3,
        third_max_y=spec.n * y3,
        c_sum=spec.n * (xq + yq),
        n=spec.n,
        d=spec.d,
        iota=iota,
        source="analytic",
    )


def _mean_se(v):
    v = np.asarray(v, dtype=float)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def _monte_carlo_profile(spec, iota, reps, seed, workers):
    if reps < 100:
        raise DomainError("monte_carlo moment profiles need reps >= 100")
    q = 2.0 + iota
    x = np.abs(ensembles.sample_x(spec, reps, seed, workers, stream=ensembles.STREAM_PROFILE_X))
    y = np.abs(ensembles.gaussian_analogue(spec, reps, seed, workers, stream=ensembles.STREAM_PROFILE_Y))
    order = spec.moment_order()
    if order > 3.0:
        tx, tx_se = _mean_se((x**3).sum(axis=1).max(axis=1))
    else:
        # E|X|^3 diverges; any finite sample mean would be meaningless
        tx, tx_se = math.inf, 0.0
    ty, ty_se = _mean_se((y**3).sum(axis=1).max(axis=1))
    c_y = (y.max(axis=2) ** q).sum(axis=1)
    if order > q:
        c, c_se = _mean_se((x.max(axis=2) ** q).sum(axis=1) + c_y)
    else:
        c, c_se = math.inf, 0.0
    return MomentProfile(
        third_max_x=tx,
        third_max_y=ty,
        c_sum=c,
        n=spec.n,
        d=spec.d,
        iota=iota,
        source="monte_carlo",
        third_max_x_se=tx_se,
        third_max_y_se=ty_se,
        c_sum_se=c_se,
        reps=reps,
        seed=seed,
    )


def moment_profile(spec: DistributionSpec, iota: float, reps: int = 10_000, seed: int = 0,
                   method: str = "auto", workers: int = 1) -> MomentProfile:
    """Estimate the moment functionals of ``spec``.

    ``method="analytic"`` uses closed forms and is available for ``d = 1``;
    ``"monte_carlo"`` averages over ``reps`` replications drawn from streams
    reserved for profiling; ``"auto"`` picks analytic whenever it can.
    """
    if not 0.0 <= iota <= 1.0:
        raise DomainError("iota must lie in [0, 1]")
    if method == "auto":
        method = "analytic" if spec.d == 1 else "monte_carlo"
    if method == "analytic":
        return _analytic_profile(spec, float(iota))
    if method == "monte_carlo":
        return _monte_carlo_profile(spec, float(iota), int(reps), int(seed), workers)
    raise DomainError(f"unknown moment method {method!r}")
