import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maxgauss import BorelSet, DomainError, ShapeError, SmoothingParams, build_g, smoothmax
from maxgauss.smoothmax import SmoothMaxIndicator, f_third_sum, psi, psi_grad, psi_hessian, psi_third

mpmath.mp.dps = 50


def mp_psi(gamma, x):
    g = mpmath.mpf(gamma)
    return mpmath.log(mpmath.fsum(mpmath.exp(g * mpmath.mpf(v)) for v in x)) / g


def mp_softmax(gamma, x):
    g = mpmath.mpf(gamma)
    e = [mpmath.exp(g * mpmath.mpf(v)) for v in x]
    s = mpmath.fsum(e)
    return [float(v / s) for v in e]


def central(fn, x, h):
    cols = []
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        cols.append((np.asarray(fn(x + e)) - np.asarray(fn(x - e))) / (2 * h))
    return np.stack(cols, axis=-1)


def rel(a, b):
    return np.linalg.norm(np.ravel(a - b)) / np.linalg.norm(np.ravel(a))


P3 = SmoothingParams(2.0, 1.0, 0.5, 3)
X3 = np.array([1.0, 0.0, -1.0])


class TestParams:
    def test_rejects_small_product(self):
        with pytest.raises(DomainError):
            SmoothingParams(1.0, 1.0, 0.5, 2)

    @pytest.mark.parametrize("kw", [dict(gamma=-1.0), dict(delta=0.0), dict(iota=1.5), dict(d=0), dict(gamma=math.nan)])
    def test_rejects_bad_fields(self, kw):
        base = dict(gamma=2.0, delta=1.0, iota=0.5, d=2)
        base.update(kw)
        with pytest.raises(DomainError):
            SmoothingParams(**base)

    def test_round_trip(self):
        assert SmoothingParams.from_dict(P3.to_dict()) == P3

    def test_c_gamma(self):
        assert P3.c_gamma == pytest.approx(math.log(3) / 2)


class TestPsi:
    def test_two_point_symmetric(self):
        assert psi(SmoothingParams(1.0, 1.5, 0, 2), [0.0, 0.0]) == pytest.approx(math.log(2), abs=1e-15)

    @given(st.floats(-1e6, 1e6), st.floats(0.01, 100))
    def test_identity_in_one_dimension(self, t, gamma):
        assert psi(SmoothingParams(gamma, 2.0 / gamma, 0, 1), [t]) == t

    def test_against_extended_precision(self):
        exact = float(mp_psi(2.0, X3))
        v = psi(P3, X3)
        assert 1.0 <= v <= 1.0 + math.log(3) / 2
        assert v == pytest.approx(exact, rel=1e-15)

    def test_no_overflow_far_out(self):
        p = SmoothingParams(50.0, 1.0, 0, 3)
        x = np.array([1e6, 1e6 - 0.01, -1e6])
        assert psi(p, x) == pytest.approx(float(mp_psi(50.0, x)), rel=1e-15)

    def test_batch_matches_rows(self, rng):
        x = rng.normal(size=(7, 3))
        assert np.array_equal(psi(P3, x), np.array([psi(P3, r) for r in x]))

    def test_shape_errors(self):
        with pytest.raises(ShapeError):
            psi(P3, [1.0, 2.0])
        with pytest.raises(ShapeError):
            psi(P3, np.zeros((2, 2, 3, 1)))

    def test_nonfinite_rejected(self):
        with pytest.raises(DomainError):
            psi(P3, [0.0, math.inf, 1.0])

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=40),
        st.floats(0.05, 50),
    )
    def test_sandwich(self, xs, gamma):
        p = SmoothingParams(gamma, 2.0 / gamma, 0.5, len(xs))
        v = psi(p, xs)
        m = max(xs)
        tol = 8 * np.finfo(float).eps * max(1.0, abs(m) + p.c_gamma)
        assert m - tol <= v <= m + p.c_gamma + tol

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=2, max_size=8), st.floats(-100, 100))
    def test_shift_equivariance(self, xs, c):
        p = SmoothingParams(3.0, 1.0, 0.5, len(xs))
        x = np.array(xs)
        assert psi(p, x + c) == pytest.approx(psi(p, x) + c, abs=1e-12 * (1 + abs(c)))


class TestDerivatives:
    def test_grad_symmetric(self):
        assert np.allclose(psi_grad(SmoothingParams(5.0, 1.0, 0, 2), [0.0, 0.0]), [0.5, 0.5])

    def test_grad_extended_precision(self):
        pi = np.asarray(psi_grad(SmoothingParams(1.0, 1.5, 0, 2), [1.0, 0.0]))
        assert pi == pytest.approx(mp_softmax(1.0, [1.0, 0.0]), rel=1e-15)
        assert pi == pytest.approx([0.731059, 0.268941], abs=5e-7)

    def test_one_dimensional(self):
        p = SmoothingParams(2.0, 1.0, 0, 1)
        assert np.asarray(psi_grad(p, [3.0])).tolist() == [1.0]
        assert np.all(psi_hessian(p, [3.0]) == 0)
        assert np.all(psi_third(p, [3.0]) == 0)

    def test_hessian_symmetric_point(self):
        h = psi_hessian(SmoothingParams(1.0, 1.5, 0, 2), [0.0, 0.0])
        assert np.allclose(h, [[0.25, -0.25], [-0.25, 0.25]])

    def test_third_symmetric_point_vanishes(self):
        assert np.allclose(psi_third(SmoothingParams(1.0, 1.5, 0, 2), [0.0, 0.0]), 0, atol=1e-16)

    def test_grad_fd(self):
        fd = central(lambda z: psi(P3, z), X3, 1e-6)
        assert rel(np.asarray(psi_grad(P3, X3)), fd) < 1e-8

    def test_hessian_fd(self):
        fd = central(lambda z: np.asarray(psi_grad(P3, z)), X3, 1e-6)
        assert rel(psi_hessian(P3, X3), fd) < 1e-6

    def test_third_fd(self):
        fd = central(lambda z: psi_hessian(P3, z), X3, 1e-5)
        assert rel(psi_third(P3, X3), fd) < 1e-5

    def test_third_fully_symmetric(self, rng):
        p = SmoothingParams(1.5, 1.0, 0, 5)
        t = psi_third(p, rng.normal(size=5))
        for perm in [(0, 2, 1), (1, 0, 2), (2, 1, 0), (1, 2, 0)]:
            assert np.array_equal(t, t.transpose(perm))

    def test_third_dense_limit(self):
        p = SmoothingParams(2.0, 1.0, 0, 129)
        with pytest.raises(ShapeError):
            psi_third(p, np.zeros(129))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=2, max_size=12), st.floats(0.2, 20))
    def test_softmax_is_probability(self, xs, gamma):
        pi = np.asarray(psi_grad(SmoothingParams(gamma, 2 / gamma, 0, len(xs)), xs))
        assert np.all(pi >= 0) and abs(pi.sum() - 1) < 1e-14


class TestComposite:
    def setup_method(self):
        self.p = SmoothingParams(4.0, 0.5, 1.0, 5)
        self.g = build_g(BorelSet.half_line(0.0), self.p)
        self.f = SmoothMaxIndicator(self.p, self.g)

    def test_plateau_is_flat(self):
        x = np.full(5, -10.0)
        assert f_third_sum(self.p, self.g, x) == 0.0
        assert np.all(self.f.grad(x) == 0)

    def test_one_dimension_equals_g3(self, rng):
        p = SmoothingParams(4.0, 0.5, 1.0, 1)
        g = build_g(BorelSet.half_line(0.0), p)
        t = rng.uniform(-0.5, 2.0, 50)
        assert np.allclose(f_third_sum(p, g, t[:, None]), np.abs(g.eval(t, 3)), rtol=1e-14, atol=0)

    def test_envelope_and_fd(self, rng):
        env = self.f.envelope()
        for _ in range(20):
            x = rng.normal(scale=0.3, size=5) + 0.5
            assert f_third_sum(self.p, self.g, x) <= env
            fd = central(self.f.hessian, x, 1e-5)
            exact = self.f.third(x)
            if np.linalg.norm(exact) > 1e-6:
                assert rel(exact, fd) < 1e-4

    def test_factored_matches_dense(self, rng):
        p = SmoothingParams(3.0, 0.6, 0.5, 7)
        g = build_g(BorelSet(((-1.0, 0.5),)), p)
        x = rng.normal(scale=0.7, size=(200, 7))
        a = f_third_sum(p, g, x, dense=True)
        b = f_third_sum(p, g, x, dense=False)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12 * a.max())

    def test_large_d_uses_factored(self, rng):
        p = SmoothingParams(3.0, 0.6, 0.5, 500)
        g = build_g(BorelSet.half_line(2.0), p)
        x = rng.normal(scale=0.3, size=500)
        assert f_third_sum(p, g, x) <= SmoothMaxIndicator(p, g).envelope()


def test_module_exports_dense_limit():
    assert smoothmax.DENSE_THIRD_MAX_D == 128
