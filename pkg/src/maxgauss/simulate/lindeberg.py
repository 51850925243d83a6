"""Term-by-term Lindeberg swap of ``X_i`` for ``Y_i``.

With ``T_i = Y_1 + ... + Y_{i-1} + X_i + ... + X_n`` and
``L_i = T_i - X_i``, each swap splits as

    f(T_i) - f(T_{i+1}) = I_i + II_i + R_i,
    I_i  = (X_i - Y_i)^T grad f(L_i),
    II_i = (X_i^T H(L_i) X_i - Y_i^T H(L_i) Y_i) / 2,

with ``R_i`` the remainder.  In ``enumerate`` mode the Rademacher summands are
enumerated exactly and every ``Y_k`` is replaced by its tensor Gauss-Hermite
law, which has the same first and second moments as ``N(0, Sigma)``; all
expectations are then finite sums over the product of those discrete laws.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .. import bounds
from ..errors import DomainError, ShapeError
from ..smoothmax import SmoothMaxIndicator
from . import ensembles
from .ensembles import DistributionSpec

MAX_ENUM_ND = 12
DEFAULT_ORDER = 20
ATOM_BUDGET = 4_000_000
ORDER_TOL = 1e-9
# numpy's Gauss-Hermite nodes overflow somewhere between 320 and 640
MAX_ORDER = 320


@dataclass
class DiscreteLaw:
    atoms: np.ndarray  # (k, d)
    weights: np.ndarray  # (k,)

    @property
    def size(self) -> int:
        return self.weights.size

    def expect(self, fn):
        return np.tensordot(self.weights, fn(self.atoms), axes=(0, 0))


def point_mass(d: int) -> DiscreteLaw:
    return DiscreteLaw(np.zeros((1, d)), np.ones(1))


def convolve(a: DiscreteLaw, b: DiscreteLaw) -> DiscreteLaw:
    """Law of the sum of independent draws from ``a`` and ``b`` (atoms not merged)."""
    atoms = (a.atoms[:, None, :] + b.atoms[None, :, :]).reshape(-1, a.atoms.shape[1])
    return DiscreteLaw(atoms, np.outer(a.weights, b.weights).ravel())


def convolve_power(law: DiscreteLaw, k: int, d: int) -> DiscreteLaw:
    out = point_mass(d)
    for _ in range(k):
        out = convolve(out, law)
    return out


def rademacher_law(spec: DistributionSpec) -> DiscreteLaw:
    if spec.family != "rademacher":
        raise DomainError(f"enumeration needs a finitely supported family, got {spec.family!r}")
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=spec.d)))
    a = spec.mixing() * spec.scale()
    return DiscreteLaw(signs @ a.T, np.full(len(signs), 0.5**spec.d))


def gauss_hermite_law(cov: np.ndarray, order: int) -> DiscreteLaw:
    """Tensor Gauss-Hermite rule for ``N(0, cov)`` as a discrete law."""
    d = cov.shape[0]
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    nodes = nodes * math.sqrt(2.0)
    weights = weights / math.sqrt(math.pi)
    grid = np.array(list(itertools.product(nodes, repeat=d)))
    w = np.prod(np.array(list(itertools.product(weights, repeat=d))), axis=1)
    b = ensembles.gaussian_factor(cov)
    return DiscreteLaw(grid @ b.T, w / w.sum())


@dataclass
class SwapTerms:
    first: float
    second: float
    remainder: float
    first_se: float = 0.0
    second_se: float = 0.0
    remainder_se: float = 0.0


@dataclass
class LindebergDecomposition:
    mode: str
    terms: list
    total: float
    ef_x: float
    ef_y: float
    total_se: float = 0.0
    order: int | None = None
    converged: bool = True
    order_change: float | None = None
    reps: int | None = None
    seed: int | None = None
    history: list = field(default_factory=list)

    @property
    def telescoping_error(self) -> float:
        s = sum(t.first + t.second + t.remainder for t in self.terms)
        return abs(s - self.total)

    def to_dict(self) -> dict:
        out = {k: v for k, v in vars(self).items() if k != "terms"}
        out["terms"] = [vars(t).copy() for t in self.terms]
        out["telescoping_error"] = self.telescoping_error
        return out


def _swap_moments(f: SmoothMaxIndicator, lmid: DiscreteLaw, law: DiscreteLaw, other: DiscreteLaw):
    """``E f(L + V)``, ``E V^T grad f(L)`` and ``E V^T H(L) V / 2`` over the product of
    the laws of ``L``, ``V`` and the unused partner ``other``."""
    loc = lmid.atoms[:, None, :]
    v = law.atoms[None, :, :]
    grad = f.grad(lmid.atoms)[:, None, :]
    hess = f.hessian(lmid.atoms)[:, None, :, :]
    mass = float(other.weights.sum())

    def expect(vals):
        return float(np.einsum("i,j,ij->", lmid.weights, law.weights, vals)) * mass

    return (
        expect(f.value(loc + v)),
        expect((v * grad).sum(axis=-1)),
        expect(0.5 * np.einsum("...j,...jk,...k->...", v, hess, v)),
    )


def _enumerate_once(spec, f: SmoothMaxIndicator, order):
    d, n = spec.d, spec.n
    xlaw = rademacher_law(spec)
    ylaw = gauss_hermite_law(spec.x_covariance(), order)
    terms = []
    for i in range(1, n + 1):
        lmid = convolve(convolve_power(ylaw, i - 1, d), convolve_power(xlaw, n - i, d))
        ef_t, lin_x, quad_x = _swap_moments(f, lmid, xlaw, ylaw)
        ef_next, lin_y, quad_y = _swap_moments(f, lmid, ylaw, xlaw)
        first = lin_x - lin_y
        second = quad_x - quad_y
        terms.append(SwapTerms(first, second, ef_t - ef_next - first - second))
    ef_x = float(convolve_power(xlaw, n, d).expect(f.value))
    ef_y = float(convolve_power(ylaw, n, d).expect(f.value))
    return terms, ef_x, ef_y


def _enumeration_cost(spec, order):
    ysize = order**spec.d
    xsize = 2**spec.d
    cost = ysize**spec.n
    for i in range(1, spec.n + 1):
        cost = max(cost, ysize ** (i - 1) * xsize ** (spec.n - i) * max(xsize, ysize))
    return cost


def _monte_carlo(spec, f: SmoothMaxIndicator, reps, seed, workers):
    x = ensembles.sample_x(spec, reps, seed, workers, stream=ensembles.STREAM_LINDEBERG)
    y = ensembles.gaussian_analogue(spec, reps, seed, workers, stream=ensembles.STREAM_LINDEBERG + 1)
    n = spec.n
    terms = []
    for i in range(n):
        l_i = y[:, :i].sum(axis=1) + x[:, i + 1:].sum(axis=1)
        xi, yi = x[:, i], y[:, i]
        g = f.grad(l_i)
        h = f.hessian(l_i)
        first = ((xi - yi) * g).sum(axis=1)
        second = 0.5 * (np.einsum("rj,rjk,rk->r", xi, h, xi) - np.einsum("rj,rjk,rk->r", yi, h, yi))
        rem = f.value(l_i + xi) - f.value(l_i + yi) - first - second
        stats = [(float(v.mean()), float(v.std(ddof=1) / math.sqrt(reps))) for v in (first, second, rem)]
        terms.append(SwapTerms(stats[0][0], stats[1][0], stats[2][0], stats[0][1], stats[1][1], stats[2][1]))
    fx = f.value(x.sum(axis=1))
    fy = f.value(y.sum(axis=1))
    diff = fx - fy
    return LindebergDecomposition(
        mode="monte_carlo",
        terms=terms,
        total=float(diff.mean()),
        ef_x=float(fx.mean()),
        ef_y=float(fy.mean()),
        total_se=float(diff.std(ddof=1) / math.sqrt(reps)),
        reps=reps,
        seed=seed,
    )


def lindeberg_decompose(spec: DistributionSpec, f: SmoothMaxIndicator, mode: str = "enumerate",
                        reps: int = 10_000, seed: int = 0, order: int = DEFAULT_ORDER,
                        workers: int = 1, atom_budget: int = ATOM_BUDGET) -> LindebergDecomposition:
    """Expected swap terms ``E I_i``, ``E II_i``, ``E R_i`` and ``E f(S_n) - E f(S_n_dagger)``.

    ``enumerate`` starts at Gauss-Hermite ``order`` and doubles it until the
    total changes by less than 1e-9 or the next rule would exceed
    ``atom_budget`` product atoms or ``MAX_ORDER``; ``converged`` records
    which happened.
    """
    if f.params.d != spec.d:
        raise ShapeError(f"f acts on dimension {f.params.d}, spec has d = {spec.d}")
    if mode == "monte_carlo":
        return _monte_carlo(spec, f, int(reps), int(seed), workers)
    if mode != "enumerate":
        raise DomainError(f"unknown mode {mode!r}")
    if spec.family != "rademacher":
        raise DomainError(f"enumeration needs a finitely supported family, got {spec.family!r}")
    if spec.n * spec.d > MAX_ENUM_ND:
        raise ShapeError(f"n*d = {spec.n * spec.d} too large for enumeration (max {MAX_ENUM_ND})")
    if not 20 <= order <= MAX_ORDER:
        raise DomainError(f"Gauss-Hermite order must lie in [20, {MAX_ORDER}]")
    if _enumeration_cost(spec, order) > atom_budget:
        raise ShapeError(f"enumeration at order {order} exceeds the atom budget {atom_budget}")
    history = []
    terms, ef_x, ef_y = _enumerate_once(spec, f, order)
    history.append((order, ef_x - ef_y))
    change, converged = None, False
    while 2 * order <= MAX_ORDER and _enumeration_cost(spec, 2 * order) <= atom_budget:
        order *= 2
        terms, ef_x, ef_y = _enumerate_once(spec, f, order)
        change = abs((ef_x - ef_y) - history[-1][1])
        history.append((order, ef_x - ef_y))
        if change < ORDER_TOL:
            converged = True
            break
    return LindebergDecomposition(
        mode="enumerate",
        terms=terms,
        total=ef_x - ef_y,
        ef_x=ef_x,
        ef_y=ef_y,
        order=order,
        converged=converged,
        order_change=change,
        history=history,
    )


def _joint(law: DiscreteLaw, n: int) -> DiscreteLaw:
    """Joint law of ``n`` independent copies, flattened to ``n*d`` coordinates."""
    out = DiscreteLaw(np.zeros((1, 0)), np.ones(1))
    for _ in range(n):
        atoms = np.concatenate([np.repeat(out.atoms, law.size, axis=0), np.tile(law.atoms, (out.size, 1))], axis=1)
        out = DiscreteLaw(atoms, np.outer(out.weights, law.weights).ravel())
    return out


def _gaussian_expect(cov, copies, fn, order, atom_budget):
    """``E fn(Y_1..Y_copies)`` by tensor Gauss-Hermite quadrature.

    The integrands here have kinks (absolute values, maxima), where the rule
    converges only like ``1/order``; when the budget allows a second rule at
    twice the largest affordable order, Richardson extrapolation removes the
    leading error term.
    """
    dim = cov.shape[0] * copies
    if float(order) ** dim > atom_budget:
        raise ShapeError(f"joint Gauss-Hermite law has {order}^{dim} atoms, over the budget {atom_budget}")
    while 2 * order <= MAX_ORDER // 2 and float(4 * order) ** dim <= atom_budget:
        order *= 2
    coarse = float(_joint(gauss_hermite_law(cov, order), copies).expect(fn))
    if 2 * order > MAX_ORDER or float(2 * order) ** dim > atom_budget:
        return coarse
    fine = float(_joint(gauss_hermite_law(cov, 2 * order), copies).expect(fn))
    return 2.0 * fine - coarse


def enumerated_profile(spec: DistributionSpec, iota: float, order: int = DEFAULT_ORDER,
                       atom_budget: int = ATOM_BUDGET) -> bounds.MomentProfile:
    """Moment profile by exact enumeration of X and Gauss-Hermite quadrature for Y."""
    if spec.d == 1:
        return bounds.moment_profile(spec, iota, method="analytic")
    q = 2.0 + iota
    n, d = spec.n, spec.d
    cov = spec.x_covariance()

    def third(atoms):
        return (np.abs(atoms.reshape(len(atoms), n, d)) ** 3).sum(axis=1).max(axis=1)

    def top(atoms):
        return np.abs(atoms).max(axis=1) ** q

    ty = _gaussian_expect(cov, n, third, order, atom_budget)
    cy = _gaussian_expect(cov, 1, top, order, atom_budget)
    xlaw = rademacher_law(spec)
    tx = float(_joint(xlaw, n).expect(third))
    cx = float(xlaw.expect(top))
    return bounds.MomentProfile(tx, ty, n * (cx + cy), n, d, iota, source="enumerate")
