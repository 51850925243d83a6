"""Smooth surrogates for indicators of finite unions of intervals.

The surrogate equals one on the set (and on any gap narrower than ``6*delta``,
which lies entirely inside the ``3*delta`` enlargement), rises and falls
through a septic smoothstep of width ``3*delta`` and vanishes beyond.  It is
therefore sandwiched exactly between ``1_A`` and ``1_{A^{3 delta}}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import Polynomial

from .errors import DomainError, ShapeError
from .smoothmax import SmoothingParams

# S(u) = 35u^4 - 84u^5 + 70u^6 - 20u^7: S(0)=0, S(1)=1, derivatives 1..3 vanish at both ends.
SMOOTHSTEP = Polynomial([0, 0, 0, 0, 35, -84, 70, -20])
_SMOOTHSTEP_DERIVS = tuple(SMOOTHSTEP.deriv(k) for k in range(4))
_FACTOR = Polynomial([35, -84, 70, -20])


def _smoothstep(u):
    # u^4 * factor(u) on the lower half and 1 - S(1 - u) on the upper half keeps the
    # value inside [0, 1] in floating point; the monomial form overshoots 1 near u = 1
    lower = np.minimum(u, 1.0 - u)
    tail = lower**4 * _FACTOR(lower)
    return np.where(u <= 0.5, tail, 1.0 - tail)


def smoothstep_sup(order: int) -> float:
    """Exact ``max_{[0,1]} |S^(order)|`` from the critical points of S^(order)."""
    p = _SMOOTHSTEP_DERIVS[order]
    crit = p.deriv().roots()
    crit = crit[np.isreal(crit)].real
    cand = np.concatenate([[0.0, 1.0], crit[(crit >= 0) & (crit <= 1)]])
    return float(np.max(np.abs(p(cand))))


# C such that the derivative bounds of the constructed surrogate hold for every gamma*delta > 1:
# sup|g''| = M2/(3 delta)^2 <= C gamma/delta and sup|g'''| = M3/(3 delta)^3 <= C gamma^2/delta.
BIG_C = max(smoothstep_sup(2) / 9.0, smoothstep_sup(3) / 27.0)


def _as_bound(v) -> float:
    v = float(v)
    if math.isnan(v):
        raise DomainError("interval endpoints may not be NaN")
    return v


@dataclass(frozen=True)
class BorelSet:
    """Finite union of disjoint closed intervals; endpoints may be infinite."""

    intervals: tuple = ()

    def __post_init__(self):
        ivs = tuple((_as_bound(lo), _as_bound(hi)) for lo, hi in self.intervals)
        for lo, hi in ivs:
            if lo > hi:
                raise DomainError(f"interval ({lo}, {hi}) has lo > hi")
            if lo == math.inf or hi == -math.inf:
                raise DomainError(f"interval ({lo}, {hi}) is empty at infinity")
        for (_, hi), (lo, _) in zip(ivs, ivs[1:]):
            if not hi < lo:
                raise DomainError("intervals must be disjoint with strictly increasing endpoints")
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def half_line(cls, t: float) -> "BorelSet":
        """``(-inf, t]``."""
        return cls(((-math.inf, t),))

    @classmethod
    def real_line(cls) -> "BorelSet":
        return cls(((-math.inf, math.inf),))

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def contains(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=bool)
        for lo, hi in self.intervals:
            out |= (t >= lo) & (t <= hi)
        return out

    def issubset(self, other: "BorelSet") -> bool:
        return all(
            any(olo <= lo and hi <= ohi for olo, ohi in other.intervals) for lo, hi in self.intervals
        )


def _merge(intervals, gap):
    """Merge sorted intervals whose separation is at most ``gap``."""
    merged = []
    for lo, hi in intervals:
        if merged and lo - merged[-1][1] <= gap:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return tuple((lo, hi) for lo, hi in merged)


def enlarge(a: BorelSet, t: float) -> BorelSet:
    """The closed ``t``-enlargement ``{x : dist(x, a) <= t}``."""
    t = float(t)
    if not t >= 0:
        raise DomainError(f"enlargement radius must be nonnegative, got {t}")
    if t == 0:
        return a
    widened = [(lo - t, hi + t) for lo, hi in a.intervals]
    return BorelSet(_merge(widened, 0.0))


@dataclass(frozen=True)
class SmoothIndicator:
    """Septic-smoothstep surrogate of ``1_A`` with certified derivative bounds.

    ``plateaus`` is where the function equals one, ``width`` the length of
    each transition.  ``base_set``, ``gamma`` and ``delta`` record what the
    surrogate was built for so that it can be certified afterwards.
    """

    plateaus: BorelSet
    width: float
    sup_d1: float
    sup_d2: float
    sup_d3: float
    big_c: float
    base_set: BorelSet = field(default_factory=BorelSet)
    gamma: float = 1.0
    delta: float = 1.0

    @property
    def kinks(self) -> np.ndarray:
        """Points where the third derivative is not differentiable."""
        pts = []
        for lo, hi in self.plateaus.intervals:
            if math.isfinite(lo):
                pts += [lo - self.width, lo]
            if math.isfinite(hi):
                pts += [hi, hi + self.width]
        return np.array(sorted(set(pts)))

    def transition_zones(self):
        """``(start, end, rising)`` for every transition."""
        zones = []
        for lo, hi in self.plateaus.intervals:
            if math.isfinite(lo):
                zones.append((lo - self.width, lo, True))
            if math.isfinite(hi):
                zones.append((hi, hi + self.width, False))
        return zones

    def eval(self, t, order: int = 0):
        return g_eval(self, t, order)


def build_g(a: BorelSet, params: SmoothingParams) -> SmoothIndicator:
    """Smooth surrogate ``g`` with ``1_A <= g <= 1_{A^{3 delta}}``."""
    if not isinstance(params, SmoothingParams):
        raise DomainError("params must be SmoothingParams")
    delta = params.delta
    width = 3.0 * delta
    # gaps strictly narrower than 6*delta are inside A^{3 delta}; fill them
    merged = []
    for lo, hi in a.intervals:
        if merged and lo - merged[-1][1] < 2.0 * width:
            merged[-1][1] = hi
        else:
            merged.append([lo, hi])
    plateaus = BorelSet(tuple((lo, hi) for lo, hi in merged))
    has_edge = any(math.isfinite(e) for iv in plateaus.intervals for e in iv)
    sups = [smoothstep_sup(k) / width**k if has_edge else 0.0 for k in (1, 2, 3)]
    return SmoothIndicator(
        plateaus=plateaus,
        width=width,
        sup_d1=sups[0],
        sup_d2=sups[1],
        sup_d3=sups[2],
        big_c=BIG_C,
        base_set=a,
        gamma=params.gamma,
        delta=delta,
    )


def g_eval(g: SmoothIndicator, t, order: int = 0):
    """Value of the ``order``-th derivative of ``g`` at ``t`` (scalar or array)."""
    if order not in (0, 1, 2, 3):
        raise DomainError(f"derivative order must be 0..3, got {order!r}")
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    w = g.width
    p = _smoothstep if order == 0 else _SMOOTHSTEP_DERIVS[order]
    scale = w ** (-order)
    for lo, hi in g.plateaus.intervals:
        if order == 0:
            out[(t >= lo) & (t <= hi)] = 1.0
        if math.isfinite(lo):
            m = (t > lo - w) & (t < lo)
            out[m] = scale * p((t[m] - (lo - w)) / w)
        if math.isfinite(hi):
            # falling edge is S((hi + w - t) / w); each derivative picks up a factor -1
            m = (t > hi) & (t < hi + w)
            out[m] = (-1) ** order * scale * p((hi + w - t[m]) / w)
    return float(out) if scalar else out


@dataclass
class Certification:
    max_d1: float
    max_d2: float
    max_d3: float
    ratio_d1: float
    ratio_d2: float
    ratio_d3: float
    big_c: float
    sandwich_violations: int
    points: int
    failures: list

    @property
    def passed(self) -> bool:
        return not self.failures


def certify_bounds(g: SmoothIndicator, grid_points: int = 1000, tol: float = 4 * np.finfo(float).eps) -> Certification:
    """Dense-grid check of the derivative bounds and the pointwise sandwich.

    Each transition zone gets ``grid_points`` equally spaced points; plateau
    interiors, gaps and the far field are sampled too.  The report fails if
    ``max|g'| delta > 1``, ``max|g''| delta/gamma > big_c``,
    ``max|g'''| delta/gamma^2 > big_c``, any observed maximum exceeds the
    claimed sup-norm, or the sandwich is violated anywhere on the grid.
    """
    if grid_points < 1000:
        raise ShapeError("certification needs at least 1000 grid points per transition zone")
    delta, gamma = g.delta, g.gamma
    pieces = [np.linspace(a, b, grid_points) for a, b, _ in g.transition_zones()]
    # sample the base set and its 3-delta shell independently of the plateau layout
    for lo, hi in g.base_set.intervals:
        lo_f = lo if math.isfinite(lo) else (hi if math.isfinite(hi) else 0.0) - 10 * delta
        hi_f = hi if math.isfinite(hi) else lo_f + 10 * delta
        pieces.append(np.linspace(lo_f - 4 * delta, hi_f + 4 * delta, grid_points))
    if not pieces:
        pieces.append(np.linspace(-10 * delta, 10 * delta, grid_points))
    t = np.unique(np.concatenate(pieces))
    maxima = [float(np.max(np.abs(g_eval(g, t, k)))) for k in (1, 2, 3)]
    ratios = [maxima[0] * delta, maxima[1] * delta / gamma, maxima[2] * delta / gamma**2]
    failures = []
    if ratios[0] > 1.0:
        failures.append(f"max|g'|*delta = {ratios[0]:.6g} > 1")
    if ratios[1] > g.big_c:
        failures.append(f"max|g''|*delta/gamma = {ratios[1]:.6g} > C = {g.big_c:.6g}")
    if ratios[2] > g.big_c:
        failures.append(f"max|g'''|*delta/gamma^2 = {ratios[2]:.6g} > C = {g.big_c:.6g}")
    for k, (obs, claim) in enumerate(zip(maxima, (g.sup_d1, g.sup_d2, g.sup_d3)), start=1):
        if obs > claim * (1 + 1e-12):
            failures.append(f"observed max|g^({k})| = {obs:.6g} exceeds certified {claim:.6g}")
    values = g_eval(g, t, 0)
    inside = g.base_set.contains(t)
    shell = enlarge(g.base_set, 3 * delta).contains(t)
    bad = (values < inside - tol) | (values > shell + tol) | (values < -tol) | (values > 1 + tol)
    n_bad = int(bad.sum())
    if n_bad:
        failures.append(f"{n_bad} sandwich violations")
    return Certification(*maxima, *ratios, g.big_c, n_bad, int(t.size), failures)


def corrupt_width(g: SmoothIndicator, width: float) -> SmoothIndicator:
    """Copy of ``g`` with a different transition width (for negative tests)."""
    return replace(g, width=float(width))
