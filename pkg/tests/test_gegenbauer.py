import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from lowdim_maxcut.anticonc import SignConfiguration, exact_second_moment, random_admissible
from lowdim_maxcut.embedding import UnitEmbedding
from lowdim_maxcut.gegenbauer import (
    GegenbauerBasis,
    I_closed,
    I_quadrature,
    I_quadrature_table,
    arcsin_gegenbauer_coeff,
    arcsin_gegenbauer_coeffs,
    coefficient_table,
    construct_Q,
    delta0_bound,
    delta0_log_bound,
    delta_k,
    eval_C,
    eval_P,
    eval_P_table,
    gegenbauer_moment_bound,
    harmonic_dimension,
    kernel_psd_spot_check,
    log_abs_delta,
    ratio_closed,
    ratio_table,
)


def rodrigues_P(d, k, t):
    """P_k by Rodrigues' formula, P_k(1) = 1 (low k only)."""
    sympy = pytest.importorskip("sympy")
    x = sympy.symbols("x")
    w = sympy.Rational(d - 3, 2)
    expr = (1 - x**2) ** (-w) * sympy.diff((1 - x**2) ** (k + w), x, k)
    expr = sympy.simplify(expr)
    return float(expr.subs(x, t) / expr.subs(x, 1))


class TestBasis:
    def test_rejects_small_d(self):
        with pytest.raises(ValueError):
            GegenbauerBasis(2)

    @pytest.mark.parametrize("d", [3, 4, 7])
    def test_measure_normalized(self, d):
        b = GegenbauerBasis(d)
        val, _ = integrate.quad(lambda t: b.c_d * (1 - t * t) ** b.w, -1, 1)
        assert val == pytest.approx(1.0, rel=1e-10)

    def test_harmonic_dimension(self):
        assert [harmonic_dimension(3, k) for k in range(5)] == [1, 3, 5, 7, 9]
        assert harmonic_dimension(2, 3) == 2
        assert harmonic_dimension(4, 2) == 9


class TestEvalP:
    def test_low_degrees(self):
        b = GegenbauerBasis(5)
        t = np.linspace(-1, 1, 11)
        assert np.allclose(eval_P(b, 0, t), 1)
        assert np.allclose(eval_P(b, 1, t), t)

    def test_legendre_d3(self):
        b = GegenbauerBasis(3)
        assert eval_P(b, 2, 0.0) == pytest.approx(-0.5)
        t = np.linspace(-1, 1, 9)
        for k in range(8):
            assert np.allclose(eval_P(b, k, t), special.eval_legendre(k, t))

    @pytest.mark.parametrize("d", [3, 4, 6])
    @pytest.mark.parametrize("k", [2, 3, 5])
    def test_rodrigues_oracle(self, d, k):
        b = GegenbauerBasis(d)
        for t in (-0.7, 0.1, 0.55):
            assert eval_P(b, k, t) == pytest.approx(rodrigues_P(d, k, t), rel=1e-10, abs=1e-12)

    @pytest.mark.parametrize("d", [4, 5, 9])
    def test_matches_scipy(self, d):
        b = GegenbauerBasis(d)
        t = np.linspace(-1, 1, 7)
        for k in (3, 17, 60):
            assert np.allclose(eval_C(b, k, t), special.eval_gegenbauer(k, b.lam, t), rtol=1e-9)

    @given(st.integers(3, 12), st.integers(0, 250), st.floats(-1, 1))
    def test_bounded_and_normalized(self, d, k, t):
        b = GegenbauerBasis(d)
        assert abs(eval_P(b, k, t)) <= 1 + 1e-9
        assert eval_P(b, k, 1.0) == pytest.approx(1.0)

    @given(st.integers(3, 10), st.integers(2, 60), st.floats(-1, 1))
    def test_recurrence_residual(self, d, k, t):
        b = GegenbauerBasis(d)
        lam = b.lam
        C = [eval_C(b, j, t) for j in (k - 2, k - 1, k)]
        scale = max(1.0, *map(abs, C))
        resid = k * C[2] - (2 * (k + lam - 1) * t * C[1] - (k + 2 * lam - 2) * C[0])
        assert abs(resid) <= 1e-10 * scale * (k + 2 * lam)

    def test_rejects_outside_interval(self):
        with pytest.raises(ValueError):
            eval_P(GegenbauerBasis(3), 2, 1.1)

    @pytest.mark.parametrize("d", [3, 4, 5])
    def test_orthogonality(self, d):
        b = GegenbauerBasis(d)
        x, wts = np.polynomial.legendre.leggauss(80)
        th = np.pi / 2 * (x + 1)
        base = np.pi / 2 * wts * b.c_d * np.sin(th) ** (d - 2)
        P = eval_P_table(b, 8, np.cos(th))
        M = (P * base) @ P.T
        off = M - np.diag(np.diag(M))
        assert np.max(np.abs(off)) <= 1e-12
        assert np.allclose(np.diag(M), [1 / harmonic_dimension(d, k) for k in range(9)])


class TestIClosed:
    def test_vanishes_above_A(self):
        b = GegenbauerBasis(4)
        assert I_closed(b, 6, 5) == 0.0

    @pytest.mark.parametrize("d", [3, 4, 5, 8])
    def test_signs(self, d):
        b = GegenbauerBasis(d)
        for A in (3, 10, 30):
            for k in range(A + 1):
                assert np.sign(I_closed(b, k, A)) == (-1) ** k

    @pytest.mark.parametrize("d", [3, 4, 5])
    def test_ratio_k0(self, d):
        b = GegenbauerBasis(d)
        for A in (0, 4, 10 * d):
            r = I_closed(b, 0, A + 1) / I_closed(b, 0, A)
            assert r == pytest.approx(2 * (A + b.w + 1) / (A + 2 * b.w + 2), rel=1e-12)

    def test_base_cases(self):
        for d in (3, 4, 5):
            b = GegenbauerBasis(d)
            assert I_closed(b, 0, 0) == pytest.approx(1.0, rel=1e-13)
            assert I_closed(b, 1, 0) == 0.0

    @pytest.mark.parametrize("d", [3, 4, 6])
    def test_double_precision_quad(self, d):
        b = GegenbauerBasis(d)
        for k, A in ((0, 0), (1, 3), (2, 5), (4, 6)):
            f = lambda t: (1 - t) ** A * eval_P(b, k, t) * b.c_d * (1 - t * t) ** b.w  # noqa: E731
            val, _ = integrate.quad(f, -1, 1, epsabs=1e-14, epsrel=1e-12)
            assert I_closed(b, k, A) == pytest.approx(val, rel=1e-9, abs=1e-13)


class TestIQuadrature:
    def test_examples(self):
        b = GegenbauerBasis(3)
        assert I_quadrature(b, 0, 0) == pytest.approx(1.0, rel=1e-14)
        assert abs(I_quadrature(b, 1, 0)) < 1e-30
        assert I_quadrature(b, 2, 5) == pytest.approx(I_closed(b, 2, 5), rel=1e-8)

    @pytest.mark.parametrize("d", [3, 4, 5])
    def test_closed_form_small_A(self, d):
        b = GegenbauerBasis(d)
        A = 5
        q = I_quadrature_table(b, A + 3, A)
        c = np.array([I_closed(b, k, A) for k in range(A + 4)])
        assert np.all(np.abs(c - q) <= 1e-8 * np.maximum(np.abs(c), 1e-30))


class TestDelta:
    @pytest.mark.parametrize("d", [3, 4, 5])
    def test_sign_pattern(self, d):
        A = 10 * d
        for k in range(A + 2):
            dk = delta_k(d, k)
            assert (dk < 0) if k % 2 == 0 else (dk > 0)
        for k in range(A + 2, A + 6):
            assert delta_k(d, k) == 0.0
        assert coefficient_table(d).sign_pattern_ok

    def test_log_abs_matches_direct(self):
        for k in (0, 3, 17, 31):
            assert log_abs_delta(3, k) == pytest.approx(math.log(abs(delta_k(3, k))), rel=1e-12)

    @pytest.mark.parametrize("d", [3, 4, 5, 10, 20, 40])
    def test_delta0_bound(self, d):
        r = delta0_bound(d)
        assert r.holds

    def test_delta0_bound_values(self):
        assert delta0_bound(3).bound == pytest.approx(0.1 * 1.5**28)
        slopes = np.diff([delta0_log_bound(d) for d in range(3, 12)])
        assert np.allclose(slopes, 9 * math.log(1.5))

    def test_table_identity(self):
        t = coefficient_table(4, 20)
        assert np.allclose(t.delta, 1.9 * t.I_A - t.I_A1)


class TestRatios:
    @pytest.mark.parametrize("d", [3, 4, 5, 8, 20])
    def test_table(self, d):
        r = ratio_table(d)
        assert r.increasing and r.passed
        assert r.minimum == pytest.approx((21 * d - 1) / (11 * d - 1), rel=1e-12)
        assert r.minimum > 1.9

    def test_claimed_41_over_21_only_at_d2(self):
        # (21d - 1)/(11d - 1) decreases in d; 41/21 is its value at d = 2
        vals = [(21 * d - 1) / (11 * d - 1) for d in range(2, 10)]
        assert vals[0] == pytest.approx(41 / 21)
        assert all(v < 41 / 21 for v in vals[1:])

    @given(st.integers(3, 12), st.integers(1, 60))
    def test_k_equals_A(self, d, A):
        assert ratio_closed(GegenbauerBasis(d), A, A) == pytest.approx(A + 1)


class TestArcsinCoefficients:
    @pytest.mark.parametrize("d", [3, 4, 5])
    def test_parity(self, d):
        c = arcsin_gegenbauer_coeffs(GegenbauerBasis(d), 40)
        assert np.all(np.abs(c[0::2]) <= 1e-10)
        assert np.all(c[1::2] > 0)

    def test_k1_d3(self):
        b = GegenbauerBasis(3)
        a = arcsin_gegenbauer_coeff(b, 1)
        assert a == pytest.approx(arcsin_gegenbauer_coeff(b, 1, nodes=400), rel=1e-13)
        # d = 3: (1/2) int t arcsin t dt = pi/8
        assert a == pytest.approx(math.pi / 8, rel=1e-13)

    def test_matches_scipy_quad(self):
        b = GegenbauerBasis(4)
        for k in (1, 5, 11):
            f = lambda t: np.arcsin(t) * eval_P(b, k, t) * b.c_d * (1 - t * t) ** b.w  # noqa: E731
            val, _ = integrate.quad(f, -1, 1, epsabs=1e-13, limit=200)
            assert arcsin_gegenbauer_coeff(b, k) == pytest.approx(val, rel=1e-8)

    def test_expansion_reconstructs_arcsin(self):
        d = 3
        b = GegenbauerBasis(d)
        c = arcsin_gegenbauer_coeffs(b, 400)
        t = np.array([-0.5, 0.0, 0.3, 0.8])
        N = np.array([harmonic_dimension(d, k) for k in range(401)])
        approx = (N * c) @ eval_P_table(b, 400, t)
        assert np.allclose(approx, np.arcsin(t), atol=1e-3)


class TestQ:
    @pytest.mark.parametrize("d", [3, 4, 5])
    def test_construction(self, d):
        Q = construct_Q(d)
        assert Q.passed
        assert Q.C > 0 and Q.q0 > 0
        A = 10 * d
        even = np.arange(2, A + 1, 2)
        assert np.allclose(Q.q[even], Q.C * np.abs(Q.delta[even]), rtol=1e-9, atol=1e-15)
        assert Q.q0 == pytest.approx(Q.C * abs(Q.delta[0]))
        assert Q.grid_max_excess <= 0

    def test_certificate_on_admissible_configs(self):
        rng = np.random.default_rng(5)
        for d in (3, 4):
            for _ in range(5):
                cfg = SignConfiguration(random_admissible(40, d, rng))
                assert exact_second_moment(cfg) >= gegenbauer_moment_bound(d, cfg.total_weight)


class TestKernelSpotCheck:
    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_psd_sums(self, d):
        rng = np.random.default_rng(d)
        V = UnitEmbedding.normalized(rng.standard_normal((30, d)))
        r = kernel_psd_spot_check(V, 30)
        assert r.holds and r.d == max(d, 3)

    def test_rejects_smaller_basis(self):
        with pytest.raises(ValueError):
            kernel_psd_spot_check(UnitEmbedding(np.eye(5)), 3, d=4)
