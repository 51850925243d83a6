"""Generative models for the summands and their Gaussian analogues.

Random numbers come from Philox, a counter-based generator: replication
``r`` of stream ``s`` under seed ``k`` always uses key ``k`` and a counter
whose high words are ``(r, s)``.  A replication therefore draws the same
numbers no matter which worker produces it or in which order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special

from ..errors import DomainError, ShapeError

FAMILIES = ("gaussian", "rademacher", "student_t", "sym_pareto")
COVARIANCES = ("identity", "equicorr", "ar1")

# stream ids; each consumer of randomness gets its own
STREAM_X = 0
STREAM_Y = 1
STREAM_PROFILE_X = 2
STREAM_PROFILE_Y = 3
STREAM_LINDEBERG = 4


@dataclass(frozen=True)
class DistributionSpec:
    """Law of ``X_1..X_n``: i.i.d. vectors ``X_i = A xi_i`` with ``A A^T = Sigma``.

    ``tail`` is the degrees of freedom for ``student_t`` and the tail index
    for ``sym_pareto`` (ignored otherwise).  With ``standardized`` the
    coordinates of ``xi`` have unit variance, so ``Cov(X_i) = Sigma``;
    otherwise ``Cov(X_i) = Var(xi_1j) * Sigma``.
    """

    family: str
    n: int
    d: int
    tail: float | None = None
    covariance: str = "identity"
    rho: float = 0.0
    standardized: bool = True

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.covariance not in COVARIANCES:
            raise DomainError(f"unknown covariance {self.covariance!r}; expected one of {COVARIANCES}")
        for name in ("n", "d"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.family in ("student_t", "sym_pareto"):
            if self.tail is None or not float(self.tail) > 2.0:
                raise DomainError(f"{self.family} needs a tail parameter > 2, got {self.tail!r}")
            object.__setattr__(self, "tail", float(self.tail))
        else:
            object.__setattr__(self, "tail", None)
        rho = float(self.rho)
        if self.covariance == "equicorr" and not 0.0 <= rho < 1.0:
            raise DomainError(f"equicorr rho must lie in [0, 1), got {rho}")
        if self.covariance == "ar1" and not -1.0 < rho < 1.0:
            raise DomainError(f"ar1 rho must lie in (-1, 1), got {rho}")
        if self.covariance == "identity":
            rho = 0.0
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "standardized", bool(self.standardized))

    def sigma(self) -> np.ndarray:
        """Correlation model ``Sigma`` (unit diagonal)."""
        d = self.d
        if self.covariance == "identity":
            return np.eye(d)
        if self.covariance == "equicorr":
            return np.full((d, d), self.rho) + (1.0 - self.rho) * np.eye(d)
        idx = np.arange(d)
        return self.rho ** np.abs(idx[:, None] - idx[None, :])

    def coordinate_variance(self) -> float:
        """Variance of one raw (unstandardized) coordinate of ``xi``."""
        if self.family == "student_t":
            return self.tail / (self.tail - 2.0)
        if self.family == "sym_pareto":
            return self.tail / (self.tail - 2.0)
        return 1.0

    def scale(self) -> float:
        return 1.0 if self.standardized else math.sqrt(self.coordinate_variance())

    def x_covariance(self) -> np.ndarray:
        """``E X_i X_i^T``, shared by the Gaussian analogue."""
        return self.scale() ** 2 * self.sigma()

    def mixing(self) -> np.ndarray:
        """Cholesky factor of ``Sigma``."""
        try:
            return np.linalg.cholesky(self.sigma())
        except np.linalg.LinAlgError as exc:
            raise DomainError("covariance matrix is not positive definite") from exc

    def moment_order(self) -> float:
        """Supremum of the finite absolute-moment orders of a coordinate."""
        if self.family in ("student_t", "sym_pareto"):
            return self.tail
        return math.inf

    def abs_moment(self, q: float) -> float:
        """``E|xi|^q`` for one standardized coordinate; ``inf`` when it diverges."""
        q = float(q)
        if q < 0:
            raise DomainError("moment order must be nonnegative")
        if q >= self.moment_order():
            return math.inf
        s = math.sqrt(self.coordinate_variance())
        if self.family == "rademacher":
            raw = 1.0
        elif self.family == "gaussian":
            raw = gaussian_abs_moment(q)
        elif self.family == "sym_pareto":
            raw = self.tail / (self.tail - q)
        else:
            nu = self.tail
            raw = nu ** (q / 2) * math.exp(
                special.gammaln((q + 1) / 2) + special.gammaln((nu - q) / 2)
                - 0.5 * math.log(math.pi) - special.gammaln(nu / 2)
            )
        return raw / s**q

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "n": self.n,
            "d": self.d,
            "tail": self.tail,
            "covariance": self.covariance,
            "rho": self.rho,
            "standardized": self.standardized,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DistributionSpec":
        return cls(**{k: data[k] for k in ("family", "n", "d", "tail", "covariance", "rho", "standardized") if k in data})


def gaussian_abs_moment(q: float, sigma: float = 1.0) -> float:
    """``E|N(0, sigma^2)|^q = sigma^q 2^{q/2} Gamma((q+1)/2) / sqrt(pi)``."""
    return sigma**q * 2 ** (q / 2) * math.exp(special.gammaln((q + 1) / 2)) / math.sqrt(math.pi)


def replication_rng(seed: int, stream: int, rep: int) -> np.random.Generator:
    if seed < 0 or stream < 0 or rep < 0:
        raise DomainError("seed, stream and replication index must be nonnegative")
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, rep, stream]))


def _standardized_draws(spec: DistributionSpec, rng: np.random.Generator) -> np.ndarray:
    shape = (spec.n, spec.d)
    if spec.family == "gaussian":
        xi = rng.standard_normal(shape)
    elif spec.family == "rademacher":
        xi = 2.0 * rng.integers(0, 2, size=shape) - 1.0
    elif spec.family == "student_t":
        xi = rng.standard_t(spec.tail, size=shape)
    else:
        # numpy's pareto is Lomax; adding one gives Pareto with scale 1 and tail index alpha
        mag = rng.pareto(spec.tail, size=shape) + 1.0
        xi = mag * (2.0 * rng.integers(0, 2, size=shape) - 1.0)
    return xi / math.sqrt(spec.coordinate_variance())


def _x_block(spec, seed, stream, start, stop):
    a = spec.mixing() * spec.scale()
    out = np.empty((stop - start, spec.n, spec.d))
    for r in range(start, stop):
        out[r - start] = _standardized_draws(spec, replication_rng(seed, stream, r)) @ a.T
    return out


def _y_block(spec, seed, stream, start, stop):
    b = gaussian_factor(spec.x_covariance())
    out = np.empty((stop - start, spec.n, spec.d))
    for r in range(start, stop):
        out[r - start] = replication_rng(seed, stream, r).standard_normal((spec.n, spec.d)) @ b.T
    return out


def gaussian_factor(cov: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise DomainError("covariance is too ill-conditioned to factor") from exc


def _blocks(reps, workers):
    k = max(1, min(int(workers), reps))
    edges = np.linspace(0, reps, k + 1).astype(int)
    return list(zip(edges[:-1], edges[1:]))


def _run_blocks(fn, spec, reps, seed, stream, workers):
    if reps < 1:
        raise ShapeError("reps must be positive")
    blocks = _blocks(reps, workers)
    if len(blocks) == 1:
        return fn(spec, seed, stream, 0, reps)
    with ProcessPoolExecutor(max_workers=len(blocks)) as pool:
        parts = list(pool.map(fn, *zip(*[(spec, seed, stream, a, b) for a, b in blocks])))
    return np.concatenate(parts, axis=0)


def sample_x(spec: DistributionSpec, reps: int, seed: int, workers: int = 1, stream: int = STREAM_X) -> np.ndarray:
    """``reps x n x d`` array of independent replications of ``X_1..X_n``."""
    return _run_blocks(_x_block, spec, reps, seed, stream, workers)


def gaussian_analogue(spec: DistributionSpec, reps: int, seed: int, workers: int = 1, stream: int = STREAM_Y) -> np.ndarray:
    """``reps x n x d`` array of ``Y_1..Y_n`` with ``Y_i ~ N(0, Cov(X_i))``."""
    return _run_blocks(_y_block, spec, reps, seed, stream, workers)
