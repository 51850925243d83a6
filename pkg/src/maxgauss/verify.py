"""Property suites run by ``maxgauss verify``.

Each suite draws its own random cases from a seeded generator and counts
cases and failures.  ``quick`` scale keeps the whole run to seconds;
``full`` matches the sizes used by the acceptance tests.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import bounds, smoother, smoothmax
from .simulate import ensembles, experiment, lindeberg
from .smoothmax import SmoothingParams

EPS = np.finfo(float).eps

SCALES = {
    "quick": dict(sandwich=10_000, fd=100, sets=10, envelope=1_000, fuzz=100_000, null_reps=2_000),
    "full": dict(sandwich=100_000, fd=1_000, sets=50, envelope=10_000, fuzz=1_000_000, null_reps=10_000),
}


@dataclass
class SuiteResult:
    name: str
    cases: int
    failures: int
    seconds: float = 0.0
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_dict(self) -> dict:
        return {**vars(self), "passed": self.passed}


def random_params(rng, d, gamma_range=(0.1, 50.0)):
    gamma = float(math.exp(rng.uniform(*np.log(gamma_range))))
    u = float(rng.uniform(1.05, 4.0))
    return SmoothingParams(gamma, u / gamma, float(rng.uniform(0, 1)), d)


def random_borel_set(rng, scale=1.0):
    """Up to four intervals, sometimes with an infinite end."""
    k = int(rng.integers(1, 5))
    ends = np.sort(rng.uniform(-5 * scale, 5 * scale, 2 * k))
    ends = ends + np.arange(2 * k) * 1e-9 * scale
    ivs = [[ends[2 * i], ends[2 * i + 1]] for i in range(k)]
    if rng.random() < 0.3:
        ivs[0][0] = -math.inf
    if rng.random() < 0.3:
        ivs[-1][1] = math.inf
    return smoother.BorelSet(tuple(map(tuple, ivs)))


def sandwich_suite(cases, rng):
    fails = 0
    done = 0
    while done < cases:
        d = int(rng.integers(1, 65))
        batch = min(2000, cases - done)
        p = random_params(rng, d)
        x = rng.normal(scale=rng.uniform(0.1, 1000.0), size=(batch, d))
        v = smoothmax.psi(p, x)
        m = x.max(axis=1)
        tol = 8 * EPS * np.maximum(1.0, np.abs(m) + p.c_gamma)
        fails += int(np.sum((v < m - tol) | (v > m + p.c_gamma + tol)))
        done += batch
    return SuiteResult("smoothmax_sandwich", cases, fails)


def _fd_rel(exact, approx):
    return np.linalg.norm(np.ravel(exact - approx)) / max(np.linalg.norm(np.ravel(exact)), 1e-300)


def derivative_suite(points, rng, rtol=1e-5):
    fails = 0
    h_scale = EPS ** (1 / 3)
    for _ in range(points):
        d = int(rng.integers(1, 7))
        p = random_params(rng, d, (0.5, 20.0))
        x = rng.normal(scale=2.0 / p.gamma, size=d)
        h = h_scale * (1 + np.abs(x))
        eye = np.eye(d) * h
        grad = np.asarray(smoothmax.psi_grad(p, x))
        hess = smoothmax.psi_hessian(p, x)
        third = smoothmax.psi_third(p, x)
        fd_grad = np.array([(smoothmax.psi(p, x + e) - smoothmax.psi(p, x - e)) / (2 * e[k]) for k, e in enumerate(eye)])
        fd_hess = np.stack([(np.asarray(smoothmax.psi_grad(p, x + e)) - np.asarray(smoothmax.psi_grad(p, x - e))) / (2 * e[k]) for k, e in enumerate(eye)], axis=-1)
        fd_third = np.stack([(smoothmax.psi_hessian(p, x + e) - smoothmax.psi_hessian(p, x - e)) / (2 * e[k]) for k, e in enumerate(eye)], axis=-1)
        if d == 1:
            ok = abs(grad[0] - 1) < 1e-12 and abs(hess).max() == 0 and abs(third).max() == 0
        else:
            ok = all(_fd_rel(a, b) <= rtol for a, b in ((grad, fd_grad), (hess, fd_hess), (third, fd_third)))
        fails += not ok
    return SuiteResult("psi_derivatives_fd", points, fails)


def certificate_suite(sets, rng):
    fails = 0
    cs = []
    for _ in range(sets):
        p = random_params(rng, 1, (0.2, 20.0))
        a = random_borel_set(rng, scale=3 * p.delta)
        g = smoother.build_g(a, p)
        cert = smoother.certify_bounds(g, 2000)
        cs.append(max(cert.ratio_d2, cert.ratio_d3))
        fails += not cert.passed
    return SuiteResult("indicator_certificate", sets, fails, detail=f"max observed C = {max(cs):.6g}")


def envelope_suite(points, rng):
    fails = 0
    done = 0
    while done < points:
        d = int(rng.integers(1, 9))
        p = random_params(rng, d, (0.5, 20.0))
        g = smoother.build_g(smoother.BorelSet.half_line(float(rng.normal())), p)
        batch = min(500, points - done)
        x = rng.normal(scale=3 * p.delta, size=(batch, d))
        vals = smoothmax.f_third_sum(p, g, x)
        env = smoothmax.SmoothMaxIndicator(p, g).envelope()
        fails += int(np.sum(vals > env * (1 + 1e-12)))
        done += batch
    return SuiteResult("third_derivative_envelope", points, fails)


def moment_inequality_suite(cases, rng):
    a = np.exp(rng.uniform(0, math.log(1e6), cases))
    x = rng.uniform(0, 1e3, cases)
    iota = rng.uniform(0, 1, cases)
    lhs, rhs = bounds.lemma3_bound(a, x, iota)
    return SuiteResult("moment_inequality_fuzz", cases, int(np.sum(lhs > rhs)))


def lindeberg_suite(seed):
    spec = ensembles.DistributionSpec("rademacher", n=2, d=2)
    p = SmoothingParams(2.0, 1.0, 0.5, 2)
    f = smoothmax.SmoothMaxIndicator(p, smoother.build_g(smoother.BorelSet.half_line(1.0), p))
    dec = lindeberg.lindeberg_decompose(spec, f, mode="enumerate")
    checks = [abs(t.first) <= 1e-8 for t in dec.terms] + [abs(t.second) <= 1e-8 for t in dec.terms]
    checks.append(dec.telescoping_error <= 1e-8)
    mc = lindeberg.lindeberg_decompose(spec, f, mode="monte_carlo", reps=10_000, seed=seed)
    checks += [abs(t.first) <= 3 * t.first_se for t in mc.terms]
    checks += [abs(t.second) <= 3 * t.second_se for t in mc.terms]
    return SuiteResult("lindeberg_zero_terms", len(checks), checks.count(False))


def gaussian_null_suite(reps, seed):
    spec = ensembles.DistributionSpec("gaussian", n=10, d=5, covariance="equicorr", rho=0.3)
    p = SmoothingParams(1.0, 1.5, 1.0, 5)
    res = experiment.run_experiment(spec, p, reps, seed)
    thr = experiment.dkw_threshold(reps, reps)
    fails = int(res.kolmogorov > thr) + sum(pt.lhs > 0 for pt in res.strassen_grid)
    return SuiteResult("gaussian_null", 1 + len(res.strassen_grid), fails,
                       detail=f"kolmogorov = {res.kolmogorov:.4g}, threshold = {thr:.4g}")


def determinism_suite(seed):
    spec = ensembles.DistributionSpec("sym_pareto", n=5, d=4, tail=3.5)
    a = ensembles.sample_x(spec, 64, seed, workers=1)
    b = ensembles.sample_x(spec, 64, seed, workers=3)
    c = ensembles.gaussian_analogue(spec, 64, seed, workers=1)
    e = ensembles.gaussian_analogue(spec, 64, seed, workers=3)
    return SuiteResult("worker_determinism", 2, int(a.tobytes() != b.tobytes()) + int(c.tobytes() != e.tobytes()))


def run_suites(scale: str = "quick", seed: int = 0) -> list:
    if scale not in SCALES:
        raise ValueError(f"unknown scale {scale!r}")
    sz = SCALES[scale]
    rng = np.random.default_rng(seed)
    jobs = [
        lambda: sandwich_suite(sz["sandwich"], rng),
        lambda: derivative_suite(sz["fd"], rng),
        lambda: certificate_suite(sz["sets"], rng),
        lambda: envelope_suite(sz["envelope"], rng),
        lambda: moment_inequality_suite(sz["fuzz"], rng),
        lambda: lindeberg_suite(seed),
        lambda: gaussian_null_suite(sz["null_reps"], seed),
        lambda: determinism_suite(seed),
    ]
    out = []
    for job in jobs:
        t0 = time.perf_counter()
        res = job()
        res.seconds = time.perf_counter() - t0
        out.append(res)
    return out
