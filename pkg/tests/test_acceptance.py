"""Acceptance criteria 1-11.  Each test prints one PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from maxgauss import (BorelSet, DistributionSpec, MomentProfile, SmoothingParams, bounds, build_g, moment_profile,
                      reports, tune, verify)
from maxgauss.simulate import experiment, lindeberg
from maxgauss.smoothmax import SmoothMaxIndicator

pytestmark = pytest.mark.acceptance


@pytest.fixture
def verdict(capsys):
    def emit(k, title, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {k:2d}] {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        assert ok, f"criterion {k} failed: {detail}"

    return emit


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_01_smooth_max_sandwich(verdict):
    res, secs = timed(lambda: verify.sandwich_suite(100_000, np.random.default_rng(101)))
    ok = res.cases == 100_000 and res.failures == 0 and secs < 10
    verdict(1, "smooth-max sandwich", ok, f"{res.failures} violations in {res.cases} cases, {secs:.2f}s")


def _g_fd_failures(points, rng):
    # random surrogates; points within 1e-3*delta of a kink are skipped for all orders
    fails = checked = 0
    while checked < points:
        p = verify.random_params(rng, 1, (0.2, 20.0))
        g = build_g(verify.random_borel_set(rng, 3 * p.delta), p)
        zones = g.transition_zones()
        if not zones:
            continue
        lo, hi, _ = zones[int(rng.integers(len(zones)))]
        t = rng.uniform(lo - p.delta, hi + p.delta, 50)
        t = t[np.min(np.abs(t[:, None] - g.kinks[None, :]), axis=1) > 1e-3 * p.delta][: points - checked]
        h = np.finfo(float).eps ** (1 / 3) * max(1.0, np.abs(t).max())
        for k, sup in ((1, g.sup_d1), (2, g.sup_d2), (3, g.sup_d3)):
            fd = (g.eval(t + h, k - 1) - g.eval(t - h, k - 1)) / (2 * h)
            # tolerance relative to the derivative's sup-norm, so zeros of g^(k) do not blow it up
            fails += int(np.sum(np.abs(fd - g.eval(t, k)) > 1e-5 * sup))
        checked += t.size
    return fails, checked


def test_02_derivative_correctness(verdict):
    def work():
        rng = np.random.default_rng(202)
        psi_res = verify.derivative_suite(1000, rng)
        return psi_res, _g_fd_failures(1000, rng)

    (psi_res, (g_fails, g_points)), secs = timed(work)
    ok = psi_res.failures == 0 and g_fails == 0 and secs < 30
    verdict(2, "derivatives vs central differences", ok,
            f"psi: {psi_res.failures}/{psi_res.cases} failing points; g: {g_fails} failures over {g_points} points x 3 orders; {secs:.2f}s")


def test_03_smoothed_indicator_certificate(verdict):
    def work():
        rng = np.random.default_rng(303)
        certs = []
        for _ in range(50):
            p = verify.random_params(rng, 1, (0.2, 20.0))
            certs.append(verify.smoother.certify_bounds(build_g(verify.random_borel_set(rng, 3 * p.delta), p), 2000))
        return certs

    certs, secs = timed(work)
    c_impl = {c.big_c for c in certs}
    worst = max(max(c.ratio_d2, c.ratio_d3) for c in certs)
    ok = all(c.passed for c in certs) and len(c_impl) == 1 and max(c_impl) <= 4 and secs < 60
    ok = ok and all(c.ratio_d1 <= 1 and c.sandwich_violations == 0 for c in certs)
    verdict(3, "smoothed indicator certificate", ok,
            f"{sum(c.passed for c in certs)}/50 passed, C_impl = {max(c_impl):.6g}, worst observed ratio {worst:.6g}, {secs:.2f}s")


def test_04_third_derivative_envelope(verdict):
    res = verify.envelope_suite(10_000, np.random.default_rng(404))
    verdict(4, "third-derivative envelope", res.failures == 0 and res.cases == 10_000,
            f"{res.failures} violations in {res.cases} points")


def test_05_moment_inequality_fuzz(verdict):
    res, secs = timed(lambda: verify.moment_inequality_suite(1_000_000, np.random.default_rng(505)))
    verdict(5, "moment interpolation inequality", res.failures == 0 and secs < 5,
            f"{res.failures} violations in {res.cases} triples, {secs:.2f}s")


def test_06_lindeberg_zero_terms(verdict):
    res = verify.lindeberg_suite(606)
    verdict(6, "Lindeberg first/second-order terms vanish", res.failures == 0,
            f"{res.cases - res.failures}/{res.cases} checks hold (enumerate to 1e-8, monte_carlo within 3 se)")


TINY = [
    (1, 1, 2.0, 1.0, 0.5, ((0.5, math.inf),)),
    (2, 1, 1.0, 1.5, 1.0, ((-math.inf, 0.0),)),
    (3, 1, 3.0, 0.5, 0.0, ((-1.0, 0.5),)),
    (4, 1, 1.5, 1.0, 0.5, ((-math.inf, 1.0),)),
    (5, 1, 2.0, 0.75, 0.25, ((-math.inf, 0.5),)),
    (1, 2, 2.0, 1.0, 0.5, ((-math.inf, 0.5),)),
    (1, 2, 1.0, 1.2, 0.0, ((0.0, 1.0),)),
    (2, 2, 1.0, 2.0, 1.0, ((-math.inf, 1.0),)),
    (2, 2, 4.0, 0.5, 0.25, ((0.0, 2.0),)),
    (1, 3, 2.0, 1.0, 0.75, ((-math.inf, 1.0),)),
]


def test_07_smooth_comparison_bound_tiny_instances(verdict):
    rows = []
    for n, d, gamma, delta, iota, ivs in TINY:
        spec = DistributionSpec("rademacher", n, d)
        p = SmoothingParams(gamma, delta, iota, d)
        f = SmoothMaxIndicator(p, build_g(BorelSet(ivs), p))
        gap = abs(lindeberg.lindeberg_decompose(spec, f).total)
        rows.append((gap, bounds.l_n(p, lindeberg.enumerated_profile(spec, iota)).l_n))
    bad = sum(g > b for g, b in rows)
    slack = min(b / g for g, b in rows)
    verdict(7, "|E f(S_n) - E f(S_n_dagger)| <= L_n", bad == 0,
            f"{bad} violations in {len(rows)} instances, smallest L_n/gap ratio {slack:.3g}")


def test_08_gaussian_null(verdict):
    spec = DistributionSpec("gaussian", 10, 5, covariance="equicorr", rho=0.3)
    res = experiment.run_experiment(spec, SmoothingParams(1.0, 1.5, 1.0, 5), 10_000, 808)
    thr = experiment.dkw_threshold(10_000, 10_000)
    positive = sum(pt.lhs > 0 for pt in res.strassen_grid)
    ok = res.kolmogorov < thr and positive == 0 and len(res.strassen_grid) == 201
    verdict(8, "Gaussian null", ok, f"kolmogorov {res.kolmogorov:.4f} < DKW {thr:.4f}; {positive}/201 thresholds with lhs > 0")


HEAVY = DistributionSpec("sym_pareto", 50, 20, tail=2.75)


def test_09_heavy_tail_set_inequality(verdict):
    def work():
        prof = moment_profile(HEAVY, 0.5, reps=10_000, seed=909, method="monte_carlo")
        tuned = tune.optimize(tune.TuneRequest(prof, 20, tune.minimize_radius_given_budget(0.5)))
        params = SmoothingParams(tuned.gamma, tuned.delta, 0.5, 20)
        return experiment.run_experiment(HEAVY, params, 10_000, 909, profile=prof)

    res, secs = timed(work)
    worst = max(pt.lhs - pt.bound for pt in res.strassen_grid)
    ok = res.violations == 0 and secs < 120
    verdict(9, "heavy-tail set inequality", ok,
            f"{res.violations}/201 violations, gamma={res.params.gamma:.4g}, delta={res.params.delta:.4g}, "
            f"radius={res.report.radius:.4g}, bound={res.report.prob_bound:.4g}, max(lhs-bound)={worst:.4g}, {secs:.1f}s")


PROFILES = [
    (MomentProfile(1.0, 2 * math.sqrt(2 / math.pi), 1 + 2 * math.sqrt(2 / math.pi), 1, 1, 1.0), "budget", 0.9),
    (MomentProfile.zero(1, 10, 0.5), "budget", 0.5),
    (MomentProfile(50.0, 60.0, 80.0, 50, 20, 0.5), "budget", 0.5),
    (MomentProfile(math.inf, 300.0, 500.0, 50, 20, 0.5), "radius_cap", 200.0),
    (MomentProfile(2.0, 3.0, 4.0, 1, 100, 0.25), "radius_cap", 10.0),
]


def _grid_min(req, n=256):
    best = math.inf
    for g in np.geomspace(*req.gamma_range, n):
        for dl in np.geomspace(*req.delta_range, n):
            if g * dl <= 1 or bounds._epsilon(g, dl) >= 1:
                continue
            rep = bounds.l_n(SmoothingParams(g, dl, req.profile.iota, req.d), req.profile)
            if req.objective.kind == "budget":
                if rep.prob_bound <= req.objective.value:
                    best = min(best, rep.radius)
            elif rep.radius <= req.objective.value:
                best = min(best, rep.prob_bound)
    return best


def test_10_tuner_soundness(verdict):
    lines, ok = [], True
    for prof, kind, value in PROFILES:
        req = tune.TuneRequest(prof, prof.d, tune.Objective(kind, value))
        res = tune.optimize(req)
        rep = bounds.l_n(SmoothingParams(res.gamma, res.delta, prof.iota, prof.d), prof)
        feasible = res.gamma * res.delta > 1 and (
            rep.prob_bound <= value if kind == "budget" else rep.radius <= value)
        ref = _grid_min(req)
        ok &= feasible and rep == res.report and res.objective_value <= 1.01 * ref
        lines.append(f"{res.objective_value / ref:.5f}")
    verdict(10, "tuner vs 256x256 grid", ok, "optimizer/grid ratios " + ", ".join(lines))


def test_11_worker_determinism(verdict):
    spec = DistributionSpec("student_t", 8, 6, tail=4.0, covariance="ar1", rho=0.4)
    params = SmoothingParams(1.5, 2.0, 0.5, 6)
    one = experiment.run_experiment(spec, params, 2000, 1111, workers=1)
    four = experiment.run_experiment(spec, params, 2000, 1111, workers=4)
    a, b = reports.dumps(one.to_dict()), reports.dumps(four.to_dict())
    csv_same = reports.strassen_csv(one) == reports.strassen_csv(four) and reports.samples_csv(one) == reports.samples_csv(four)
    verdict(11, "worker-count determinism", a == b and csv_same,
            f"JSON reports {'identical' if a == b else 'differ'} ({len(a)} bytes), CSV {'identical' if csv_same else 'differ'}")
