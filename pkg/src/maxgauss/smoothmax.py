"""Log-sum-exp smooth maximum and its derivative tensors.

``psi(x) = log(sum_j exp(gamma * x_j)) / gamma`` over-estimates ``max_j x_j``
by at most ``log(d) / gamma``.  Everything here is evaluated with a max-shift
so that ``gamma`` up to 50 and ``|x|`` up to 1e3 never overflow.

All functions accept a single point of shape ``(d,)`` or a batch of shape
``(..., d)``; the derivative tensors gain one or two trailing axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError

# Dense third-order tensors are only materialised up to this dimension.
DENSE_THIRD_MAX_D = 128


def _epsilon(gamma: float, delta: float) -> float:
    u = gamma * delta
    return u * math.exp(-(u * u - 1.0) / 2.0)


@dataclass(frozen=True)
class SmoothingParams:
    """Smoothing sharpness ``gamma``, half-width ``delta``, moment surplus
    ``iota`` and ambient dimension ``d``."""

    gamma: float
    delta: float
    iota: float
    d: int

    def __post_init__(self):
        for name in ("gamma", "delta", "iota"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)) or not math.isfinite(value):
                raise DomainError(f"{name} must be a finite real, got {value!r}")
            object.__setattr__(self, name, float(value))
        if isinstance(self.d, bool) or int(self.d) != self.d or self.d < 1:
            raise DomainError(f"d must be a positive integer, got {self.d!r}")
        object.__setattr__(self, "d", int(self.d))
        if self.gamma <= 0 or self.delta <= 0:
            raise DomainError("gamma and delta must be positive")
        if not 0.0 <= self.iota <= 1.0:
            raise DomainError(f"iota must lie in [0, 1], got {self.iota}")
        if not self.gamma * self.delta > 1.0:
            raise DomainError(f"gamma*delta must exceed 1, got {self.gamma * self.delta!r}")
        eps = _epsilon(self.gamma, self.delta)
        if not 0.0 <= eps < 1.0:
            # gamma*delta rounds so close to 1 that epsilon is no longer < 1
            raise DomainError(f"epsilon = {eps!r} is not below 1")

    @property
    def epsilon(self) -> float:
        return _epsilon(self.gamma, self.delta)

    @property
    def c_gamma(self) -> float:
        return math.log(self.d) / self.gamma

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "delta": self.delta, "iota": self.iota, "d": self.d}

    @classmethod
    def from_dict(cls, data: dict) -> "SmoothingParams":
        return cls(gamma=data["gamma"], delta=data["delta"], iota=data["iota"], d=data["d"])


@dataclass(frozen=True)
class SoftmaxWeights:
    """Gradient of ``psi``: nonnegative weights summing to one."""

    pi: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.pi, dtype=dtype)


def _check(params: SmoothingParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != params.d:
        raise ShapeError(f"expected trailing dimension {params.d}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("x must be finite")
    return x


def _shifted(params: SmoothingParams, x: np.ndarray):
    # argmax picks the first maximal index, which keeps ties reproducible
    idx = np.argmax(x, axis=-1)
    m = np.take_along_axis(x, idx[..., None], axis=-1)
    w = np.exp(params.gamma * (x - m))
    return m[..., 0], w, w.sum(axis=-1)


def psi(params: SmoothingParams, x):
    """Smooth maximum of ``x`` along its last axis."""
    x = _check(params, x)
    m, _, s = _shifted(params, x)
    out = m + np.log(s) / params.gamma
    return float(out) if out.ndim == 0 else out


def _weights(params, x):
    _, w, s = _shifted(params, x)
    return w / s[..., None]


def psi_grad(params: SmoothingParams, x) -> SoftmaxWeights:
    x = _check(params, x)
    return SoftmaxWeights(_weights(params, x))


def _hessian_from_pi(gamma, pi):
    outer = pi[..., :, None] * pi[..., None, :]
    diag = np.zeros_like(outer)
    idx = np.arange(pi.shape[-1])
    diag[..., idx, idx] = pi
    return gamma * (diag - outer)


def psi_hessian(params: SmoothingParams, x) -> np.ndarray:
    """``gamma * (diag(pi) - pi pi^T)``; symmetric with zero row sums."""
    x = _check(params, x)
    return _hessian_from_pi(params.gamma, _weights(params, x))


def _sorted_triple_index(d: int):
    j, k, l = np.meshgrid(np.arange(d), np.arange(d), np.arange(d), indexing="ij")
    trip = np.sort(np.stack([j, k, l], axis=-1), axis=-1)
    return trip[..., 0], trip[..., 1], trip[..., 2]


def _third_from_pi(gamma, pi):
    d = pi.shape[-1]
    pj = pi[..., :, None, None]
    pk = pi[..., None, :, None]
    pl = pi[..., None, None, :]
    eye = np.eye(d, dtype=bool)
    e_jk = eye[:, :, None]
    e_jl = eye[:, None, :]
    e_kl = eye[None, :, :]
    t = (e_jk & e_jl) * pj - e_jk * pj * pl - e_jl * pj * pk - e_kl * pk * pj + 2.0 * pj * pk * pl
    # mirror the j <= k <= l entries so all six permutations agree bit-for-bit
    a, b, c = _sorted_triple_index(d)
    t = t[..., a, b, c]
    return gamma**2 * t


def psi_third(params: SmoothingParams, x) -> np.ndarray:
    """Dense third-derivative tensor of ``psi`` (``d <= 128``)."""
    x = _check(params, x)
    if params.d > DENSE_THIRD_MAX_D:
        raise ShapeError(f"dense third tensor limited to d <= {DENSE_THIRD_MAX_D}")
    return _third_from_pi(params.gamma, _weights(params, x))


class SmoothMaxIndicator:
    """The composite ``f = g o psi`` used by the comparison argument.

    ``g`` is any object exposing ``eval(t, order)`` for orders 0..3 together
    with ``sup_d1``, ``sup_d2`` and ``sup_d3``; in practice a
    :class:`maxgauss.smoother.SmoothIndicator`.
    """

    def __init__(self, params: SmoothingParams, g):
        self.params = params
        self.g = g

    def value(self, x):
        return self.g.eval(psi(self.params, x), 0)

    def grad(self, x):
        x = _check(self.params, x)
        m, w, s = _shifted(self.params, x)
        t = m + np.log(s) / self.params.gamma
        pi = w / s[..., None]
        return np.asarray(self.g.eval(t, 1))[..., None] * pi

    def hessian(self, x):
        x = _check(self.params, x)
        m, w, s = _shifted(self.params, x)
        t = m + np.log(s) / self.params.gamma
        pi = w / s[..., None]
        g1 = np.asarray(self.g.eval(t, 1))[..., None, None]
        g2 = np.asarray(self.g.eval(t, 2))[..., None, None]
        return g2 * (pi[..., :, None] * pi[..., None, :]) + g1 * _hessian_from_pi(self.params.gamma, pi)

    def third(self, x):
        x = _check(self.params, x)
        m, w, s = _shifted(self.params, x)
        t = m + np.log(s) / self.params.gamma
        pi = w / s[..., None]
        gamma = self.params.gamma
        g1, g2, g3 = (np.asarray(self.g.eval(t, k))[..., None, None, None] for k in (1, 2, 3))
        h = _hessian_from_pi(gamma, pi)
        pj = pi[..., :, None, None]
        pk = pi[..., None, :, None]
        pl = pi[..., None, None, :]
        mixed = h[..., :, None, :] * pk + h[..., None, :, :] * pj + h[..., :, :, None] * pl
        return g3 * pj * pk * pl + g2 * mixed + g1 * _third_from_pi(gamma, pi)

    def envelope(self) -> float:
        g, gamma = self.g, self.params.gamma
        return g.sup_d3 + 6.0 * gamma * g.sup_d2 + 6.0 * gamma**2 * g.sup_d1


def _third_abs_sum_factored(gamma, pi, g1, g2, g3):
    # Sum of |d^3 f| grouped by index-coincidence pattern; O(d) per point.
    p2 = (pi**2).sum(axis=-1)
    p3 = (pi**3).sum(axis=-1)
    distinct = g3 - 3.0 * gamma * g2 + 2.0 * gamma**2 * g1
    distinct_mass = 1.0 - 3.0 * p2 + 2.0 * p3
    g1e, g2e, g3e = g1[..., None], g2[..., None], g3[..., None]
    pair = g3e * pi + gamma * g2e * (1.0 - 3.0 * pi) + gamma**2 * g1e * (2.0 * pi - 1.0)
    pair_sum = 3.0 * (pi * (1.0 - pi) * np.abs(pair)).sum(axis=-1)
    diag = g3e * pi**3 + 3.0 * gamma * g2e * (pi**2 - pi**3) + gamma**2 * g1e * (pi - 3.0 * pi**2 + 2.0 * pi**3)
    return np.abs(diag).sum(axis=-1) + pair_sum + np.abs(distinct) * np.maximum(distinct_mass, 0.0)


def f_third_sum(params: SmoothingParams, g, x, dense=None):
    """``sum_{j,k,l} |d^3 (g o psi) / dx_j dx_k dx_l|`` at ``x``.

    Uses the dense tensor for ``d <= 128`` and the factored O(d) form beyond
    that; ``dense`` forces either path.
    """
    x = _check(params, x)
    if dense is None:
        dense = params.d <= DENSE_THIRD_MAX_D
    comp = SmoothMaxIndicator(params, g)
    if dense:
        out = np.abs(comp.third(x)).sum(axis=(-3, -2, -1))
    else:
        m, w, s = _shifted(params, x)
        t = m + np.log(s) / params.gamma
        pi = w / s[..., None]
        g1, g2, g3 = (np.asarray(g.eval(t, k), dtype=float) for k in (1, 2, 3))
        out = _third_abs_sum_factored(params.gamma, pi, g1, g2, g3)
    return float(out) if np.ndim(out) == 0 else out
