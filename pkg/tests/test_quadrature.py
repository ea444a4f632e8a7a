import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracblock.errors import DivergentIntegral, InvalidAlpha, InvalidParams, NotConverged, NotPositive
from fracblock.operators import certify_positive, spectral_norm
from fracblock.oracle import matrix_power, relative_error
from fracblock.quadrature import (DEFAULT_SCHEME, QuadratureScheme, balakrishnan_e1,
                                  balakrishnan_e2, balakrishnan_e3_apply,
                                  change_of_variables_closed_form, change_of_variables_integral,
                                  cov_beta, e2_coefficient, integrate_half_line,
                                  weighted_resolvent_closed_form, scalar_identity_integral,
                                  weighted_resolvent_integral)

from conftest import spd_matrices

TOL = 10 * DEFAULT_SCHEME.rel_tol
ALPHAS = [round(0.1 * k, 1) for k in range(1, 10)]


class TestScheme:
    @pytest.mark.parametrize("kw", [{"rel_tol": 0.0}, {"rel_tol": 1.0}, {"base_nodes": 4},
                                    {"max_doublings": 0}, {"split_point": -1.0}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            QuadratureScheme(**kw)


class TestScalarIdentity:
    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_matches_reflection_formula(self, alpha):
        exact = math.pi / math.sin(math.pi * alpha)
        assert abs(scalar_identity_integral(alpha) - exact) / exact <= 1e-8


class TestE1:
    def test_scalar_one(self):
        np.testing.assert_allclose(balakrishnan_e1([[1.0]], 0.5), [[1.0]], rtol=TOL)

    @pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
    def test_identity(self, alpha):
        assert relative_error(balakrishnan_e1(np.eye(3), alpha), np.eye(3)) <= TOL

    def test_diagonal(self):
        np.testing.assert_allclose(balakrishnan_e1(np.diag([1.0, 4.0]), 0.5), np.diag([1.0, 0.5]),
                                   rtol=TOL, atol=1e-14)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, 5e-4, 1 - 5e-4, 1.5])
    def test_alpha_range(self, alpha):
        with pytest.raises(InvalidAlpha):
            balakrishnan_e1(np.eye(2), alpha)

    def test_rejects_non_positive(self):
        with pytest.raises(NotPositive):
            balakrishnan_e1(np.diag([1.0, -1.0]), 0.5)

    def test_info(self):
        _, info = balakrishnan_e1(np.diag([1.0, 4.0]), 0.3, return_info=True)
        assert info.converged and info.distances[-1] <= DEFAULT_SCHEME.rel_tol
        # weak monotonicity of successive node-doubling distances
        assert info.distances[-1] <= info.distances[0]

    def test_not_converged(self):
        scheme = QuadratureScheme(rel_tol=1e-15, max_doublings=1, base_nodes=8)
        with pytest.raises(NotConverged) as exc:
            balakrishnan_e1(np.diag([1.0, 1e4]), 0.5, scheme)
        assert exc.value.distance > 0

    @given(spd_matrices(), st.sampled_from(ALPHAS))
    def test_oracle_agreement(self, A, alpha):
        assert relative_error(balakrishnan_e1(A, alpha), matrix_power(A, -alpha)) <= TOL

    @given(spd_matrices(max_n=8), st.floats(0.05, 0.45), st.floats(0.05, 0.45))
    def test_semigroup(self, A, a, b):
        lhs = balakrishnan_e1(A, a) @ balakrishnan_e1(A, b)
        rhs = balakrishnan_e1(A, a + b)
        assert spectral_norm(lhs - rhs) <= 20 * DEFAULT_SCHEME.rel_tol * spectral_norm(rhs)

    @given(spd_matrices(max_n=8))
    def test_uniform_bound(self, A):
        M = certify_positive(A).M
        sup = max(spectral_norm(balakrishnan_e1(A, a)) for a in np.arange(0.05, 0.96, 0.1))
        assert sup <= M + 20 * DEFAULT_SCHEME.rel_tol


class TestE2:
    def test_coefficient(self):
        assert e2_coefficient(0.5, 1) == pytest.approx(2 / math.pi)

    def test_scalar_matches_e1(self):
        np.testing.assert_allclose(balakrishnan_e2([[1.0]], 0.5, 1), balakrishnan_e1([[1.0]], 0.5),
                                   rtol=TOL)

    def test_alpha_above_one(self):
        np.testing.assert_allclose(balakrishnan_e2(np.diag([1.0, 4.0]), 1.5, 1), np.diag([1.0, 0.125]),
                                   rtol=TOL, atol=1e-14)

    def test_identity_m2(self):
        assert relative_error(balakrishnan_e2(np.eye(3), 2.5, 2), np.eye(3)) <= TOL

    @pytest.mark.parametrize("alpha,m", [(1.0, 1), (2.0, 1), (0.0, 2), (3.5, 2), (0.5, 0)])
    def test_range(self, alpha, m):
        with pytest.raises(InvalidAlpha):
            balakrishnan_e2(np.eye(2), alpha, m)

    @given(spd_matrices(max_n=10), st.sampled_from(ALPHAS))
    def test_route_agreement(self, A, alpha):
        e1 = balakrishnan_e1(A, alpha)
        for m in (1, 2):
            assert relative_error(balakrishnan_e2(A, alpha, m), e1) <= TOL

    @given(spd_matrices(max_n=10), st.floats(1.05, 1.95))
    def test_above_one_vs_oracle(self, A, alpha):
        assert relative_error(balakrishnan_e2(A, alpha, 1), matrix_power(A, -alpha)) <= TOL


class TestE3:
    def test_scalar(self):
        # quadrature of the scalar integrand at 30 digits gives 0.70710678118654752
        np.testing.assert_allclose(balakrishnan_e3_apply([[2.0]], 0.5, [1.0]), [0.70710678118654752],
                                   rtol=TOL)

    def test_positive_power_identity(self):
        np.testing.assert_allclose(balakrishnan_e3_apply(np.eye(3), -0.5, [1.0, 0, 0]), [1.0, 0, 0],
                                   rtol=TOL, atol=1e-14)

    def test_positive_power_diagonal(self):
        np.testing.assert_allclose(balakrishnan_e3_apply(np.diag([1.0, 4.0]), -0.5, [0.0, 1.0]),
                                   [0.0, 2.0], rtol=TOL, atol=1e-14)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -1.0])
    def test_range(self, alpha):
        with pytest.raises(InvalidAlpha):
            balakrishnan_e3_apply(np.eye(2), alpha, [1.0, 0.0])

    def test_vector_length(self):
        with pytest.raises(InvalidParams):
            balakrishnan_e3_apply(np.eye(2), 0.5, [1.0, 0.0, 0.0])

    @given(spd_matrices(max_n=10), st.sampled_from(ALPHAS), st.integers(0, 2**32 - 1))
    def test_consistent_with_e1(self, A, alpha, seed):
        x = np.random.default_rng(seed).standard_normal(A.shape[0])
        y = balakrishnan_e3_apply(A, alpha, x)
        assert relative_error(y, balakrishnan_e1(A, alpha) @ x) <= TOL

    @pytest.mark.parametrize("alpha", [-0.9, -0.99, -0.999])
    def test_accuracy_near_minus_one(self, lap16, alpha):
        # tail decay approaches s**-1; the Jacobi end panel keeps full accuracy
        x = np.random.default_rng(0).standard_normal(16)
        y = balakrishnan_e3_apply(lap16.matrix, alpha, x)
        assert relative_error(y, matrix_power(lap16.matrix, -alpha) @ x) <= TOL

    @given(spd_matrices(max_n=8), st.floats(-0.9, -0.1), st.integers(0, 2**32 - 1))
    def test_positive_powers_vs_oracle(self, A, alpha, seed):
        x = np.random.default_rng(seed).standard_normal(A.shape[0])
        y = balakrishnan_e3_apply(A, alpha, x)
        assert relative_error(y, matrix_power(A, -alpha) @ x) <= 1e-6


class TestWeightedResolvent:
    def test_scalar_weighted(self):
        np.testing.assert_allclose(weighted_resolvent_integral([[1.0]], 0.5, 2), [[math.pi / 2]],
                                   rtol=TOL)

    def test_divergent(self):
        with pytest.raises(DivergentIntegral):
            weighted_resolvent_integral([[1.0]], 0.0, 1)
        with pytest.raises(DivergentIntegral):
            weighted_resolvent_integral([[1.0]], -1.0, 1)

    def test_diagonal(self):
        np.testing.assert_allclose(weighted_resolvent_integral(np.diag([1.0, 4.0]), -0.5, 1),
                                   np.diag([math.pi, math.pi / 2]), rtol=TOL)

    @pytest.mark.parametrize("gamma,frozen", [(0.25, (3.3321621929813475, 2.3561944795549177)),
                                              (1.75, (3.3321621929810588, 0.29452431060918587))])
    def test_frozen_scalar_values(self, gamma, frozen):
        # 30-digit quadrature of s**(1-gamma) (s+a)**-2 for a = 1, 4
        got = weighted_resolvent_integral(np.diag([1.0, 4.0]), 1 - gamma, 2)
        np.testing.assert_allclose(np.diag(got), frozen, rtol=TOL)

    @pytest.mark.parametrize("gamma", [0.25, 0.5, 0.75, 1.25, 1.75])
    def test_weighted_on_laplacian(self, lap8, gamma):
        A = lap8.matrix
        got = weighted_resolvent_integral(A, 1 - gamma, 2)
        assert relative_error(got, weighted_resolvent_closed_form(A, gamma)) <= TOL

    def test_closed_form_range(self):
        with pytest.raises(InvalidParams):
            weighted_resolvent_closed_form(np.eye(2), 1.0)


class TestChangeOfVariables:
    def test_scalar(self):
        np.testing.assert_allclose(change_of_variables_integral([[1.0]], 0.5, 1.0, 2.0),
                                   [[math.pi / (2 * math.cos(math.pi / 4))]], rtol=TOL)

    @pytest.mark.parametrize("g,w,th,frozen", [
        (0.25, 0.5, 1.5, 2.9619219587722442),
        (0.75, 2.0, 3.0, 3.8189726947368721),
        (0.5, 2.0, 1.5, 1.9194846792297659),
    ])
    def test_frozen_scalar_values(self, g, w, th, frozen):
        # 30-digit quadrature of s**-g / (w s**th + 1)
        np.testing.assert_allclose(change_of_variables_integral([[1.0]], g, w, th), [[frozen]],
                                   rtol=TOL)

    def test_boundary(self):
        with pytest.raises(InvalidParams):
            change_of_variables_integral([[1.0]], 0.0, 1.0, 1.0)

    def test_diagonal(self):
        expected = 0.5 * math.pi / math.sin(3 * math.pi / 4) * np.diag([1.0, 4.0 ** -0.75])
        got = change_of_variables_integral(np.diag([1.0, 4.0]), 0.5, 1.0, 2.0)
        np.testing.assert_allclose(got, expected, rtol=TOL, atol=1e-14)

    def test_beta(self):
        assert cov_beta(0.5, 2.0) == 0.75

    @pytest.mark.parametrize("g", [0.25, 0.5, 0.75])
    @pytest.mark.parametrize("w", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("th", [1.5, 2.0, 3.0])
    def test_grid_on_laplacian(self, lap8, g, w, th):
        A = lap8.matrix
        got = change_of_variables_integral(A, g, w, th)
        assert relative_error(got, change_of_variables_closed_form(A, g, w, th)) <= TOL


class TestEngine:
    def test_polynomial_weight(self):
        # int_0^inf s**0.5 / (s+1)**2 ds = pi/2
        res = integrate_half_line(lambda s: np.array([1.0 / (s + 1.0) ** 2]), 0.5, 2.0)
        assert res.value[0] == pytest.approx(math.pi / 2, rel=1e-12)

    def test_split_point_irrelevant(self):
        f = lambda s: np.array([1.0 / (s + 3.0)])
        a = integrate_half_line(f, -0.4, 1.0, QuadratureScheme(split_point=1.0), (3.0, 3.0)).value
        b = integrate_half_line(f, -0.4, 1.0, QuadratureScheme(split_point=7.0), (3.0, 3.0)).value
        assert a[0] == pytest.approx(b[0], rel=1e-12)

    def test_deterministic(self):
        A = np.diag([1.0, 2.0, 30.0]) + np.eye(3, k=1)
        assert np.array_equal(balakrishnan_e1(A, 0.37), balakrishnan_e1(A, 0.37))
