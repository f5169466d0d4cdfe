"""Kernel tests against frozen high-precision references.

Reference values were generated offline with an arbitrary-precision package
at 40 working digits: finite-kernel values through an exact-moment
Gram-Schmidt construction, limit-kernel values through arbitrary-precision
Bessel evaluation, and the diagonal through the analytic derivative.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hpkernels.errors import DomainError
from hpkernels.kernels import (
    FiniteKernel,
    LimitKernel,
    ProjectionQuad,
    VFunction,
    build_finite_kernel,
    build_rescaled_circle_kernel,
    cayley,
    cayley_inverse,
    cayley_jacobian,
    check_finite_recurrence,
    check_limit_recurrence,
    check_projection,
    convergence_profile,
    eval_finite_kernel,
    eval_limit_kernel,
    eval_phi_n,
    eval_V,
    kernel_table_csv,
    limit_kernel_matrix,
    v_norm_sq_closed,
    v_norm_sq_quadrature,
)
from hpkernels.quadrature import de_nodes
from hpkernels.weights_opuc import HPParam, eval_line_weight

# frozen references (40-digit offline generator)
K_S0_N2 = "0.38197186342054880584532103209403"  # = 6/(5 pi), x=0.5 y=1.0
K_S1_N3_OFF = "0.36875236903459214750165026969551"  # x=0.7 y=-0.4
K_S1_N3_DIAG = "2.375622973103150312634513224219"  # x=y=0.25
LIM_S05_OFF = "0.13601964279160835699043340402703"  # s=0.5 (0.8, 1.7)
LIM_DIAG = {
    (0.5, 1.3): "0.10577748759424901430215110904987",
    (0.25, 0.6): "0.89238526707132800242826527110213",
    (1.0, 2.0): "0.0064143111969159361689951276700502",
}
PHI_S1_N3 = "0.046233261662489697661079633626973"  # (alpha,beta)=(2,-1), real
PHI_S0_N2 = "0.11253953951963825869439989887584"  # (pi, 0) = 1/(2 sqrt2 pi)
V_LIM_S05 = "0.9995330489689080081001110470353"  # s=0.5 at x=0.9
V_PRE_S05_N4 = "1.3054459303776500098312674556371"  # s=0.5 N=4 at x=0.6


class TestCayley:
    def test_anchor_angles(self):
        assert cayley(0.0) == 0.0
        assert cayley(1.0) == pytest.approx(math.pi / 2, rel=1e-15)
        assert cayley(-1.0) == pytest.approx(-math.pi / 2, rel=1e-15)

    def test_unit_modulus_map(self):
        x = np.linspace(-5.0, 5.0, 41)
        z = (1j - x) / (1j + x)
        np.testing.assert_allclose(np.angle(z), cayley(x), rtol=0, atol=1e-14)

    def test_jacobian(self):
        assert cayley_jacobian(0.0) == 2.0
        assert cayley_jacobian(1.0) == 1.0
        x = np.linspace(-3, 3, 13)
        h = 1e-6
        num = (cayley(x + h) - cayley(x - h)) / (2 * h)
        np.testing.assert_allclose(num, cayley_jacobian(x), rtol=1e-8)

    @given(st.floats(-50.0, 50.0))
    @settings(max_examples=50, deadline=None)
    def test_round_trip(self, x):
        assert cayley_inverse(cayley(x)) == pytest.approx(x, rel=1e-12, abs=1e-12)


class TestFiniteKernel:
    @pytest.mark.parametrize("route", ["circle_cayley", "line_direct"])
    def test_frozen_value_s0(self, route):
        k = build_finite_kernel(HPParam(0.0), 2, route)
        got = eval_finite_kernel(k, 0.5, 1.0)
        assert got == pytest.approx(float(K_S0_N2), rel=1e-14)

    @pytest.mark.parametrize("route", ["circle_cayley", "line_direct"])
    def test_frozen_values_s1(self, route):
        k = build_finite_kernel(HPParam(1.0), 3, route)
        assert eval_finite_kernel(k, 0.7, -0.4) == pytest.approx(
            float(K_S1_N3_OFF), rel=1e-13
        )
        assert eval_finite_kernel(k, 0.25, 0.25) == pytest.approx(
            float(K_S1_N3_DIAG), rel=1e-13
        )

    def test_routes_agree_on_grid(self):
        g = np.array([-2.3, -0.7, 0.31, 0.9, 1.9])
        a = build_finite_kernel(HPParam(0.5), 4, "circle_cayley")
        b = build_finite_kernel(HPParam(0.5), 4, "line_direct")
        Ka = a.kernel_matrix(g, g)
        Kb = b.kernel_matrix(g, g)
        assert np.max(np.abs(Ka - Kb)) < 1e-12

    def test_symmetry_and_evenness(self):
        g = np.linspace(0.1, 3.0, 50)
        g = np.concatenate([-g[::2], g[1::2]])
        k = build_finite_kernel(HPParam(0.5), 6)
        K = k.kernel_matrix(g, g)
        assert np.max(np.abs(K - K.T)) < 1e-14
        Kn = k.kernel_matrix(-g, -g)
        assert np.max(np.abs(K - Kn)) < 1e-12

    def test_evenness_exact_line_route(self):
        g = np.array([0.2, 0.7, 1.4])
        k = build_finite_kernel(HPParam(1.0), 4, "line_direct")
        assert np.array_equal(k.kernel_matrix(g, g), k.kernel_matrix(-g, -g))

    @pytest.mark.parametrize("s,N", [(0.0, 5), (0.5, 6), (1.0, 3)])
    def test_trace_is_N(self, s, N):
        # angle-variable quadrature of the diagonal; the substitution is
        # measure-exact, so only quadrature error remains
        k = build_finite_kernel(HPParam(s), N)
        th, wt = de_nodes(16000)
        th, wt = th * np.pi, wt * np.pi
        tr = float(np.sum(wt * k.rho1_theta(th)) / (2 * np.pi))
        assert tr == pytest.approx(N, abs=1e-6)

    def test_reproducing_property(self):
        # int K(x,g) K(g,y) dg = K(x,y), integrated in the angle variable
        s, N = 0.5, 4
        k = build_finite_kernel(HPParam(s), N)
        th, wt = de_nodes(8000)
        th, wt = th * np.pi, wt * np.pi
        g = np.tan(th / 2.0) / N
        M = k.feature_matrix(g)  # rows ~ features at the quadrature nodes
        jac = (1.0 + (N * g) ** 2) / (2.0 * N)  # dx/dtheta at the nodes
        G = (M.conj() * (wt * jac)[:, None]).T @ M
        assert np.max(np.abs(G - np.eye(N))) < 1e-8
        x, y = 0.37, -1.21
        fx = k.feature_matrix([x])[0]
        fy = k.feature_matrix([y])[0]
        lhs = (fx @ G @ fy.conj()).real
        rhs = eval_finite_kernel(k, x, y)
        assert lhs == pytest.approx(rhs, abs=1e-8)

    def test_rank(self):
        k = build_finite_kernel(HPParam(0.5), 5)
        g = np.linspace(-2.0, 2.0, 41)
        g = g[g != 0.0]
        K = k.kernel_matrix(g, g)
        sv = np.linalg.svd(K, compute_uv=False)
        assert np.sum(sv > sv[0] * 1e-10) == 5

    def test_positive_diagonal(self):
        k = build_finite_kernel(HPParam(-0.3), 4)
        x = np.linspace(0.05, 4.0, 30)
        assert np.all(k.rho1(x) > 0)

    def test_domain_errors(self):
        k = build_finite_kernel(HPParam(0.5), 3)
        with pytest.raises(DomainError):
            eval_finite_kernel(k, 0.0, 1.0)
        with pytest.raises(DomainError):
            build_finite_kernel(HPParam(-0.7), 3)
        with pytest.raises(DomainError):
            build_finite_kernel(HPParam(0.5), 3, "other")


class TestDensityTransport:
    @pytest.mark.parametrize("s", [0.0, 0.5, 1.0])
    def test_joint_density_ratio_constant(self, s):
        # product-form joint density maps to the torus one with the
        # |dtheta/dx| factors; the ratio must be tuple-independent
        rng = np.random.Generator(np.random.Philox(key=7))
        N = 5
        ratios = []
        for _ in range(6):
            x = rng.standard_cauchy(N)
            th = cayley(x)
            vand_line = 1.0
            vand_circ = 1.0
            for i in range(N):
                for j in range(i + 1, N):
                    vand_line *= (x[i] - x[j]) ** 2
                    vand_circ *= abs(np.exp(1j * th[i]) - np.exp(1j * th[j])) ** 2
            wl = np.prod((1.0 + x**2) ** (-(s + N)))
            wc = np.prod((2.0 + 2.0 * np.cos(th)) ** s)
            jac = np.prod(cayley_jacobian(x))
            ratios.append((vand_circ * wc * jac) / (vand_line * wl))
        ratios = np.array(ratios)
        assert np.max(np.abs(ratios / ratios[0] - 1.0)) < 1e-10


class TestPhiN:
    def test_s0_closed_form(self):
        k = build_rescaled_circle_kernel(HPParam(0.0), 5)
        for a, b in [(2.0, -3.0), (7.5, 1.2), (12.0, -12.0)]:
            got = eval_phi_n(k, a, b)
            want = math.sin((a - b) / 2) / (2 * math.pi * 5 * math.sin((a - b) / 10))
            assert got.real == pytest.approx(want, abs=1e-12)
            assert abs(got.imag) < 1e-12

    def test_frozen_value_s0(self):
        k = build_rescaled_circle_kernel(HPParam(0.0), 2)
        got = eval_phi_n(k, math.pi, 0.0)
        assert got.real == pytest.approx(float(PHI_S0_N2), rel=1e-12)

    def test_frozen_value_s1(self):
        k = build_rescaled_circle_kernel(HPParam(1.0), 3)
        got = eval_phi_n(k, 2.0, -1.0)
        assert got.real == pytest.approx(float(PHI_S1_N3), rel=1e-12)
        assert abs(got.imag) < 1e-14

    def test_diagonal_real_nonnegative(self):
        k = build_rescaled_circle_kernel(HPParam(0.5), 4)
        for a in np.linspace(-11.0, 11.0, 9):
            v = eval_phi_n(k, a, a)
            assert abs(v.imag) < 1e-14
            assert v.real >= 0.0

    def test_hermitian(self):
        k = build_rescaled_circle_kernel(HPParam(0.5), 4)
        v = eval_phi_n(k, 1.3, -2.7)
        w = eval_phi_n(k, -2.7, 1.3)
        assert v == pytest.approx(np.conj(w), rel=1e-13)

    def test_window(self):
        k = build_rescaled_circle_kernel(HPParam(0.5), 3)
        with pytest.raises(DomainError):
            eval_phi_n(k, 3 * math.pi, 0.0)
        with pytest.raises(DomainError):
            eval_phi_n(k, 0.0, -9.5)


class TestLimitKernel:
    def test_frozen_off_diagonal(self):
        k = LimitKernel(HPParam(0.5))
        got = eval_limit_kernel(k, 0.8, 1.7)
        assert got == pytest.approx(float(LIM_S05_OFF), rel=1e-13)

    def test_frozen_diagonals(self):
        for (s, x), ref in LIM_DIAG.items():
            k = LimitKernel(HPParam(s))
            got = eval_limit_kernel(k, x, x)
            assert got == pytest.approx(float(ref), rel=1e-8), (s, x)

    def test_s0_diagonal_closed_form(self):
        # 1/(pi x^2) at twenty points
        k = LimitKernel(HPParam(0.0))
        for x in np.linspace(0.5, 3.0, 20):
            got = eval_limit_kernel(k, float(x), float(x))
            assert abs(got - 1.0 / (math.pi * x * x)) < 1e-10

    def test_sine_kernel_transport(self):
        # after the gauge with sgn(xy), the s=0 kernel matches the
        # sine kernel under alpha = -2/x
        k = LimitKernel(HPParam(0.0))
        for x, y in [(1.0, -1.0), (0.7, 2.2), (-0.5, -1.3), (0.3, 0.9)]:
            a, b = -2.0 / x, -2.0 / y
            sine = math.sin((a - b) / 2) / (math.pi * (a - b))
            lhs = 2.0 / abs(x * y) * sine
            rhs = math.copysign(1.0, x * y) * eval_limit_kernel(k, x, y)
            assert lhs == pytest.approx(rhs, abs=1e-13)

    def test_symmetry_bitwise(self):
        k = LimitKernel(HPParam(0.7))
        assert eval_limit_kernel(k, 1.4, -0.6) == eval_limit_kernel(k, -0.6, 1.4)
        # near-diagonal path is symmetric through the midpoint
        assert eval_limit_kernel(k, 1.0, 1.0 + 1e-7) == eval_limit_kernel(
            k, 1.0 + 1e-7, 1.0
        )

    def test_evenness(self):
        k = LimitKernel(HPParam(0.5))
        assert eval_limit_kernel(k, 0.8, 1.7) == pytest.approx(
            eval_limit_kernel(k, -0.8, -1.7), rel=1e-14
        )

    def test_matrix_agrees_with_scalar(self):
        k = LimitKernel(HPParam(0.25))
        xs = np.array([0.5, 1.0, -1.5])
        M = limit_kernel_matrix(k, xs, xs)
        for i, xv in enumerate(xs):
            for j, yv in enumerate(xs):
                assert M[i, j] == pytest.approx(
                    eval_limit_kernel(k, float(xv), float(yv)), rel=1e-13
                )

    def test_domain_errors(self):
        k = LimitKernel(HPParam(0.5))
        with pytest.raises(DomainError):
            eval_limit_kernel(k, 0.0, 1.0)
        with pytest.raises(DomainError):
            LimitKernel(HPParam(-0.6))

    @given(
        st.floats(-0.4, 2.0),
        st.floats(0.25, 4.0),
        st.floats(0.25, 4.0),
    )
    @settings(max_examples=40, deadline=None)
    def test_symmetry_property(self, s, x, y):
        k = LimitKernel(HPParam(s))
        assert eval_limit_kernel(k, x, y) == eval_limit_kernel(k, y, x)


class TestVFunction:
    def test_sine_special_case(self):
        v = VFunction(HPParam(0.0))
        assert eval_V(v, 2.0 / math.pi) == pytest.approx(1.0, rel=1e-13)
        x = np.array([0.3, 0.9, 2.4])
        np.testing.assert_allclose(eval_V(v, x), np.sin(1.0 / x), rtol=1e-12)

    def test_frozen_values(self):
        v = VFunction(HPParam(0.5))
        assert eval_V(v, 0.9) == pytest.approx(float(V_LIM_S05), rel=1e-13)
        vp = VFunction(HPParam(0.5), "prelimit", 4)
        assert eval_V(vp, 0.6) == pytest.approx(float(V_PRE_S05_N4), rel=1e-13)

    def test_odd(self):
        for v in (VFunction(HPParam(0.8)), VFunction(HPParam(0.5), "prelimit", 5)):
            x = np.array([0.2, 0.7, 1.9])
            np.testing.assert_allclose(eval_V(v, -x), -eval_V(v, x), rtol=1e-14)

    def test_norm_closed_anchors(self):
        # s=0 gives pi, s=1/2 gives 4
        assert v_norm_sq_closed(VFunction(HPParam(0.0))) == pytest.approx(
            math.pi, rel=1e-14
        )
        assert v_norm_sq_closed(VFunction(HPParam(0.5))) == pytest.approx(
            4.0, rel=1e-13
        )
        assert v_norm_sq_closed(VFunction(HPParam(0.5), "prelimit", 4)) == (
            pytest.approx(3.2, rel=1e-13)
        )

    @pytest.mark.parametrize("s", [0.0, 0.5, 1.0])
    def test_norm_quadrature_limit(self, s):
        v = VFunction(HPParam(s))
        q = v_norm_sq_quadrature(v)
        c = v_norm_sq_closed(v)
        assert abs(q - c) / c < 1e-6

    @pytest.mark.parametrize("s,N", [(0.0, 4), (0.5, 5)])
    def test_norm_quadrature_prelimit(self, s, N):
        v = VFunction(HPParam(s), "prelimit", N)
        q = v_norm_sq_quadrature(v)
        c = v_norm_sq_closed(v)
        assert abs(q - c) / c < 1e-6

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            VFunction(HPParam(-0.7))
        with pytest.raises(DomainError):
            VFunction(HPParam(0.5), "prelimit", 1)
        with pytest.raises(DomainError):
            eval_V(VFunction(HPParam(0.5)), 0.0)


class TestProjection:
    def test_residual_within_bound(self):
        k = LimitKernel(HPParam(0.0))
        r, b = check_projection(k, 1.0, 2.0, 100.0)
        assert r < 1e-3
        assert r <= b
        k5 = LimitKernel(HPParam(0.5))
        r5, b5 = check_projection(k5, 0.7, 0.7, 100.0)
        assert r5 < 1e-3
        assert r5 <= b5

    def test_halving_at_s0(self):
        # the certified chain is O(1/R) and tight at s=0
        k = LimitKernel(HPParam(0.0))
        r1, _ = check_projection(k, 1.0, 2.0, 100.0)
        r2, _ = check_projection(k, 1.0, 2.0, 200.0)
        assert 0.35 * r1 <= r2 <= 0.65 * r1

    def test_truncation_tail_is_real(self):
        # at R=50 the honest deficit exceeds 1e-3; the bound tracks it
        k = LimitKernel(HPParam(0.0))
        r, b = check_projection(k, 1.0, 2.0, 50.0)
        assert 1e-3 < r < 2.5e-3
        assert r <= b < 2.5e-3

    def test_small_R_rejected(self):
        k = LimitKernel(HPParam(0.0))
        with pytest.raises(DomainError):
            check_projection(k, 1.0, 2.0, 3.0)


class TestRecurrences:
    def test_limit_grid(self):
        for s in (0.0, 0.25, 0.8):
            for x in (0.2, 1.0, 2.6):
                for y in (0.4, 1.7, 3.0):
                    assert check_limit_recurrence(s, x, y) < 1e-10

    def test_limit_mixed_signs_and_diagonal(self):
        assert check_limit_recurrence(0.5, 0.5, -0.5) < 1e-10
        assert check_limit_recurrence(0.5, -1.1, 0.8) < 1e-10
        assert check_limit_recurrence(0.25, 2.0, 2.0) < 1e-8
        assert check_limit_recurrence(0.25, 1.0, 1.0 + 1e-7) < 1e-8

    def test_finite_examples(self):
        assert check_finite_recurrence(0.0, 3, 0.4, -0.9) < 1e-8
        assert check_finite_recurrence(0.5, 5, 0.85, 0.85) < 1e-8

    def test_finite_more_points(self):
        for x, y in [(0.2, 1.4), (-0.6, -0.3), (1.0, -2.0)]:
            assert check_finite_recurrence(0.3, 4, x, y) < 1e-8

    def test_rank_one_integrates_to_one(self):
        # the V/||V|| term contributes exactly one unit of trace
        for s, N in [(0.0, 4), (0.5, 5)]:
            v = VFunction(HPParam(s), "prelimit", N)
            ratio = v_norm_sq_quadrature(v) / v_norm_sq_closed(v)
            assert ratio == pytest.approx(1.0, abs=1e-6)


class TestConvergenceProfile:
    def test_s0_strictly_decreasing(self):
        grid = np.linspace(0.5, 3.0, 20)
        prof = convergence_profile(0.0, [4, 8, 16, 32], grid)
        gaps = [g for _, g in prof]
        assert all(b < a for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 1e-2

    def test_monotone_with_slack(self):
        grid = np.linspace(0.5, 3.0, 12)
        prof = convergence_profile(0.5, [4, 8, 16], grid)
        gaps = [g for _, g in prof]
        # allow 20 percent slack on strict monotonicity
        assert all(b < 1.2 * a for a, b in zip(gaps, gaps[1:]))


class TestCSV:
    def test_round_trip(self):
        xs = np.array([0.5, 1.0])
        ys = np.array([0.25, -0.75])
        k = build_finite_kernel(HPParam(0.5), 3)
        K = k.kernel_matrix(xs, ys)
        text = kernel_table_csv(K, xs, ys)
        lines = text.strip().split("\n")
        assert lines[0] == "x,y,value"
        assert len(lines) == 5
        x0, y0, v0 = lines[1].split(",")
        assert float(v0) == K[0, 0]  # 17 significant digits round-trip
