"""Selection of ``(gamma, delta)`` trading coupling radius against probability bound.

Two objectives are supported:

* ``budget``: smallest radius ``log(d)/gamma + 3 delta`` whose probability
  bound does not exceed the budget;
* ``radius_cap``: smallest probability bound whose radius does not exceed
  the cap.

The search runs in ``(log gamma, log delta)``.  A log-grid scan finds the
best feasible cell; refinement is a golden-section search over one
coordinate with the other pushed to its constraint boundary by bisection.
Along that inner coordinate the objective is monotone (the radius falls as
``gamma`` grows; the probability bound falls as ``delta`` grows), so the
inner optimum is the largest feasible value.  Every objective evaluation
goes through :func:`maxgauss.bounds.l_n`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bounds
from .errors import DomainError, InfeasibleError
from .smoothmax import SmoothingParams

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INNER_SCAN = 32


@dataclass(frozen=True)
class Objective:
    kind: str
    value: float

    def __post_init__(self):
        if self.kind == "budget":
            if not 0.0 < self.value < 1.0:
                raise DomainError("budget must lie in (0, 1)")
        elif self.kind == "radius_cap":
            if not self.value > 0.0:
                raise DomainError("radius cap must be positive")
        else:
            raise DomainError(f"unknown objective {self.kind!r}")


def minimize_radius_given_budget(budget: float) -> Objective:
    return Objective("budget", float(budget))


def minimize_bound_given_radius(radius_cap: float) -> Objective:
    return Objective("radius_cap", float(radius_cap))


@dataclass(frozen=True)
class TuneRequest:
    profile: bounds.MomentProfile
    d: int
    objective: Objective
    grid_points_per_axis: int = 64
    refine_iters: int = 40
    gamma_range: tuple = (1e-3, 1e3)
    delta_range: tuple = (1e-3, 1e3)

    def __post_init__(self):
        if self.grid_points_per_axis < 16:
            raise DomainError("grid_points_per_axis must be at least 16")
        if self.refine_iters < 20:
            raise DomainError("refine_iters must be at least 20")
        if self.profile.d != self.d:
            raise DomainError("profile dimension differs from d")
        for lo, hi in (self.gamma_range, self.delta_range):
            if not 0 < lo < hi:
                raise DomainError("search ranges must satisfy 0 < lo < hi")
        if self.gamma_range[1] * self.delta_range[1] <= 1.0:
            raise DomainError("search box has no point with gamma*delta > 1")


@dataclass
class TracePoint:
    gamma: float
    delta: float
    radius: float
    prob_bound: float
    feasible: bool
    stage: str


@dataclass
class TuneResult:
    gamma: float
    delta: float
    report: bounds.BoundReport
    objective: Objective
    objective_value: float
    grid_best: float
    trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "delta": self.delta,
            "objective": {"kind": self.objective.kind, "value": self.objective.value},
            "objective_value": self.objective_value,
            "grid_best": self.grid_best,
            "report": self.report.to_dict(),
            "trace": [vars(p).copy() for p in self.trace],
        }


class _Search:
    def __init__(self, req: TuneRequest):
        self.req = req
        self.trace = []
        self.best = None  # (key, gamma, delta, report)

    def evaluate(self, gamma, delta, stage):
        req = self.req
        g_lo, g_hi = req.gamma_range
        d_lo, d_hi = req.delta_range
        gamma = float(min(max(gamma, g_lo), g_hi))
        delta = float(min(max(delta, d_lo), d_hi))
        try:
            params = SmoothingParams(gamma, delta, req.profile.iota, req.d)
        except DomainError:
            return None
        report = bounds.l_n(params, req.profile)
        if req.objective.kind == "budget":
            feasible = report.prob_bound <= req.objective.value
            value = report.radius
        else:
            feasible = report.radius <= req.objective.value
            value = report.prob_bound
        self.trace.append(TracePoint(gamma, delta, report.radius, report.prob_bound, feasible, stage))
        if feasible:
            key = (value, report.radius, gamma)
            if self.best is None or key < self.best[0]:
                self.best = (key, gamma, delta, report)
        return report, feasible, value

    def largest_feasible(self, fixed, lo, hi, stage):
        """Objective at the largest feasible inner coordinate in ``(lo, hi]``."""
        if not hi > lo:
            return math.inf
        pts = np.geomspace(lo, hi, INNER_SCAN + 1)[1:]
        feas = None
        for k in range(len(pts) - 1, -1, -1):
            out = self._inner(fixed, pts[k], stage)
            if out is not None and out[1]:
                feas, value = k, out[2]
                break
        if feas is None:
            return math.inf
        if feas == len(pts) - 1:
            return value
        a, b = math.log(pts[feas]), math.log(pts[feas + 1])
        for _ in range(self.req.refine_iters):
            mid = 0.5 * (a + b)
            out = self._inner(fixed, math.exp(mid), stage)
            if out is not None and out[1]:
                a, value = mid, out[2]
            else:
                b = mid
        return value

    def _inner(self, fixed, c, stage):
        if self.req.objective.kind == "budget":
            return self.evaluate(c, fixed, stage)
        return self.evaluate(fixed, c, stage)

    def outer_value(self, log_c):
        c = math.exp(log_c)
        if self.req.objective.kind == "budget":
            # outer delta, inner gamma in (1/delta, gamma_max]
            lo = max(1.0 / c, self.req.gamma_range[0] / (1 + 1e-12))
            return self.largest_feasible(c, lo, self.req.gamma_range[1], "refine")
        lo = max(1.0 / c, self.req.delta_range[0] / (1 + 1e-12))
        return self.largest_feasible(c, lo, self.req.delta_range[1], "refine")


def optimize(req: TuneRequest) -> TuneResult:
    """Best ``(gamma, delta)`` for ``req``; raises :class:`InfeasibleError` if the
    grid scan finds no admissible point."""
    search = _Search(req)
    n = req.grid_points_per_axis
    gammas = np.geomspace(*req.gamma_range, n)
    deltas = np.geomspace(*req.delta_range, n)
    constrained = []
    for g in gammas:
        for dl in deltas:
            out = search.evaluate(float(g), float(dl), "grid")
            if out is not None:
                constrained.append(out[0].prob_bound if req.objective.kind == "budget" else out[0].radius)
    if search.best is None:
        grid_min = min(constrained) if constrained else math.inf
        what = "probability bound" if req.objective.kind == "budget" else "radius"
        raise InfeasibleError(
            f"no grid point meets the {req.objective.kind} constraint {req.objective.value}; "
            f"smallest {what} on the grid is {grid_min:.6g}",
            grid_minimum=grid_min,
        )
    grid_best = search.best[0][0]
    _, g_best, d_best, _ = search.best

    # golden-section over the outer coordinate, bracketed by +-3 grid cells
    if req.objective.kind == "budget":
        axis, center = req.delta_range, d_best
    else:
        axis, center = req.gamma_range, g_best
    step = (math.log(axis[1]) - math.log(axis[0])) / (n - 1)
    a = max(math.log(axis[0]), math.log(center) - 3 * step)
    b = min(math.log(axis[1]), math.log(center) + 3 * step)
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = search.outer_value(x1), search.outer_value(x2)
    for _ in range(req.refine_iters):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = search.outer_value(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = search.outer_value(x2)

    key, gamma, delta, report = search.best
    return TuneResult(
        gamma=gamma,
        delta=delta,
        report=report,
        objective=req.objective,
        objective_value=key[0],
        grid_best=grid_best,
        trace=search.trace,
    )


def result_from_dict(data: dict) -> TuneResult:
    return TuneResult(
        gamma=data["gamma"],
        delta=data["delta"],
        report=bounds.BoundReport.from_dict(data["report"]),
        objective=Objective(**data["objective"]),
        objective_value=data["objective_value"],
        grid_best=data["grid_best"],
        trace=[TracePoint(**p) for p in data["trace"]],
    )
