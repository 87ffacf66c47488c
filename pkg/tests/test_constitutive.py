import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy.optimize import brentq

from forchflow.constitutive import (ConstitutiveError, ForchheimerLaw, eval_dg, eval_g,
                                    eval_H, eval_K, fit_K_bounds, inverse_s, log_grid)
from strategies import laws


def test_law_validation():
    with pytest.raises(ConstitutiveError):
        ForchheimerLaw((0.0, 1.0), (1.0,))
    with pytest.raises(ConstitutiveError):
        ForchheimerLaw((0.0, 1.0), (1.0, 0.0))
    with pytest.raises(ConstitutiveError):
        ForchheimerLaw((1.0, 0.5), (1.0, 1.0))
    with pytest.raises(ConstitutiveError):
        ForchheimerLaw((-1.0,), (1.0,))
    law = ForchheimerLaw.from_pairs([(2.0, 3.0), (0.0, 1.0)])
    assert law.exponents == (0.0, 2.0) and law.coefficients == (1.0, 3.0)


def test_named_laws_degeneracy():
    assert ForchheimerLaw.darcy().degeneracy == 0.0
    assert ForchheimerLaw.two_term().degeneracy == 0.5
    assert ForchheimerLaw.three_term().degeneracy == pytest.approx(2 / 3, abs=0)
    assert ForchheimerLaw.power(1.5).degeneracy == pytest.approx(1 / 3)
    assert ForchheimerLaw.darcy().is_darcy and not ForchheimerLaw.two_term().is_darcy


def test_g_and_derivative_against_finite_difference():
    law = ForchheimerLaw((0.0, 0.7, 2.0), (1.5, 0.3, 2.0))
    s = np.linspace(0.5, 5.0, 11)
    h = 1e-6
    fd = (eval_g(law, s + h) - eval_g(law, s - h)) / (2 * h)
    np.testing.assert_allclose(eval_dg(law, s), fd, rtol=1e-7)
    assert eval_g(law, 0.0) == 1.5


def test_inverse_matches_brentq_oracle():
    law = ForchheimerLaw((0.0, 1.0, 2.5), (0.8, 1.7, 0.2))
    for xi in [1e-9, 0.3, 7.0, 1e3, 1e7]:
        ref = brentq(lambda s: s * float(eval_g(law, s)) - xi, 0.0, xi / law.a0 + 1,
                     xtol=1e-300, rtol=4 * np.finfo(float).eps)
        assert inverse_s(law, xi) == pytest.approx(ref, rel=1e-12)


def test_darcy_inverse_and_K_constant():
    law = ForchheimerLaw.darcy(2.0)
    xi = log_grid(1e8, 50)
    np.testing.assert_allclose(inverse_s(law, xi), xi / 2.0, rtol=1e-14)
    np.testing.assert_allclose(eval_K(law, xi), 0.5, rtol=0, atol=0)


def test_two_term_closed_form():
    # s + s^2 = xi  ->  s = (sqrt(1 + 4 xi) - 1)/2
    law = ForchheimerLaw.two_term()
    xi = np.array([0.0, 1e-3, 1.0, 42.0, 1e6])
    s = (np.sqrt(1 + 4 * xi) - 1) / 2
    np.testing.assert_allclose(inverse_s(law, xi), s, rtol=1e-12, atol=1e-300)


def test_shapes_and_domain():
    law = ForchheimerLaw.two_term()
    assert isinstance(eval_K(law, 1.0), float)
    assert eval_K(law, np.ones((2, 3))).shape == (2, 3)
    assert eval_H(law, np.ones((2, 3))).shape == (2, 3)
    assert inverse_s(law, np.arange(6.0).reshape(3, 2)).shape == (3, 2)
    with pytest.raises(ConstitutiveError):
        eval_K(law, -1.0)
    with pytest.raises(ConstitutiveError):
        inverse_s(law, np.nan)


def test_H_exact_equals_quadrature():
    law = ForchheimerLaw((0.0, 0.5, 1.0), (1.0, 2.0, 0.5))
    xi = np.array([0.0, 0.01, 1.0, 30.0, 1e4])
    np.testing.assert_allclose(eval_H(law, xi, method="exact"), eval_H(law, xi), rtol=1e-10)
    assert eval_H(law, 0.0) == 0.0


def test_H_darcy():
    # K = 1/a0 constant, H = xi^2 / a0
    law = ForchheimerLaw.darcy(4.0)
    xi = np.array([0.5, 2.0, 10.0])
    np.testing.assert_allclose(eval_H(law, xi), xi ** 2 / 4.0, rtol=1e-12)


def test_fit_K_bounds_two_term():
    fit = fit_K_bounds(ForchheimerLaw.two_term())
    assert fit.a == 0.5
    assert 0 < fit.d1 <= fit.d2
    assert fit.d3 > 0
    with pytest.raises(ConstitutiveError):
        fit_K_bounds(ForchheimerLaw.two_term(), grid=np.linspace(0, 10, 5))


@given(laws(), st.floats(0.0, 1e8))
def test_inverse_residual_property(law, xi):
    s = inverse_s(law, xi)
    assert s >= 0
    assert abs(s * float(eval_g(law, s)) - xi) <= 1e-12 * (1 + xi)


@given(laws())
def test_K_monotone_and_bounded(law):
    xi = log_grid(1e8, 200)
    K = eval_K(law, xi)
    assert K[0] == 1.0 / law.a0
    assert np.all(np.diff(K) <= 0)
    assert np.all(K > 0) and np.all(K <= 1.0 / law.a0)


@given(laws(), st.floats(1e-6, 1e6))
def test_H_sandwich_property(law, xi):
    K = float(eval_K(law, xi))
    H = float(eval_H(law, xi))
    assert K * xi ** 2 <= H * (1 + 1e-10)
    assert H <= 2 * K * xi ** 2 * (1 + 1e-10)


@given(laws())
def test_tail_exponent(law):
    # K(xi) xi^a tends to a positive constant: a_N^{-1/(alpha_N+1)}
    exps = law.exponents
    assume(exps[-1] >= 1.0 and min(np.diff(exps)) >= 0.25)
    scaled = float(eval_K(law, 1e200)) * 1e200 ** law.degeneracy
    limit = law.coefficients[-1] ** (-1.0 / (exps[-1] + 1.0))
    assert math.isclose(scaled, limit, rel_tol=1e-3)
