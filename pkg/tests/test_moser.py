import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from forchflow.exponents import AdmissibilityError, build_profile
from forchflow.moser import (DivergentSequenceError, build_schedule, direct_recursion,
                             genn_bound, limit_products, linf_bound, linf_bound_from_data,
                             max_contiguous_product, moser_alpha0_min, partial_log_products)

P = (1.04, 1.04, 1.1, 1.1)


def ladder_profile(ell_Z=0.0):
    return build_profile(2 / 3, 5 / 12, 3, ell_Z, p=P, require_moser=True)


def brute_G(gamma):
    J = len(gamma)
    G = np.ones(J + 1)
    for j in range(2, J + 1):
        best = 1.0
        for m in range(1, j):
            for n in range(m, j):
                best = max(best, float(np.prod(gamma[m:n + 1])))
        G[j] = best
    return G


@given(st.lists(st.floats(0.2, 3.0), min_size=1, max_size=12))
def test_max_contiguous_product_matches_brute_force(gamma):
    gamma = np.array(gamma)
    np.testing.assert_allclose(max_contiguous_product(gamma), brute_G(gamma), rtol=1e-12)


def test_tight_example():
    kappa = lambda j: 2.0 ** (j + 1)
    g = genn_bound(3.0, kappa, kappa, kappa, lambda j: 1.0, A=2.0, J=40)
    assert g.abar == pytest.approx(1.0, abs=1e-12)
    assert g.limit == pytest.approx(12.0, rel=1e-12)
    y = direct_recursion(3.0, kappa, kappa, kappa, lambda j: 1.0, 2.0, 60)
    assert abs(y[-1] - 12.0) <= 1e-9 * 12.0
    assert np.all(y <= g.limit * (1 + 1e-12))


def test_zero_start_and_validation():
    k = np.full(5, 2.0)
    g = genn_bound(0.0, k, k, k, np.ones(5), 1.5, 5)
    assert g.limit == 0.0 and np.all(g.bounds == 0)
    with pytest.raises(ValueError):
        genn_bound(1.0, k, k, k * 0.5, np.ones(5), 1.5, 5)  # s < r
    with pytest.raises(ValueError):
        genn_bound(1.0, k, k, k, np.ones(5), 0.5, 5)
    with pytest.raises(ValueError):
        genn_bound(1.0, k, k, k, np.ones(3), 1.5, 5)


def test_divergent_family():
    with pytest.raises(DivergentSequenceError):
        genn_bound(1.0, lambda j: 1.0, lambda j: 1.0, lambda j: 1.0, lambda j: 1.0,
                   A=2.0, J=5, cap=2000)


@st.composite
def families(draw):
    J = draw(st.integers(1, 25))
    kappa = np.array(draw(st.lists(st.floats(0.5, 8.0), min_size=J, max_size=J)))
    r = np.array(draw(st.lists(st.floats(0.2, 6.0), min_size=J, max_size=J)))
    extra = np.array(draw(st.lists(st.floats(0.0, 3.0), min_size=J, max_size=J)))
    omega = np.array(draw(st.lists(st.floats(1.0, 4.0), min_size=J, max_size=J)))
    A = draw(st.floats(1.0, 5.0))
    y0 = draw(st.floats(0.0, 5.0))
    return y0, kappa, r, r + extra, omega, A, J


@given(families())
def test_direct_recursion_below_bound(fam):
    y0, kappa, r, s, omega, A, J = fam
    g = genn_bound(y0, kappa, r, s, omega, A, J)
    y = direct_recursion(y0, kappa, r, s, omega, A, J)
    assert np.all(y <= g.bounds * (1 + 1e-10) + 1e-300)
    assert y[-1] <= g.limit * (1 + 1e-10) + 1e-300


def test_preset_ladder_values():
    prof = ladder_profile()
    s = build_schedule(prof, 8.0, 1.0, 0.5, levels=10, check=False)
    assert prof.kappa_tilde == pytest.approx(1.18111, abs=1e-5)
    np.testing.assert_allclose(s.beta[:3], [8.0, 9.449, 11.160], atol=1e-3)
    assert prof.h1 == pytest.approx(1.41667, abs=1e-5) and prof.h2 == 0.0
    np.testing.assert_allclose(s.t[:3], [0, 0.25, 0.375])
    np.testing.assert_allclose(s.omega[:3], [1, 2, 3])


def test_preset_alpha0_inadmissible_when_checked():
    strict, incl = moser_alpha0_min(ladder_profile())
    assert incl > 8
    with pytest.raises(AdmissibilityError, match="eta2"):
        build_schedule(ladder_profile(), 8.0, 1.0, 0.5)
    build_schedule(ladder_profile(), incl + 1, 1.0, 0.5)


def test_partial_products_converge():
    s = build_schedule(ladder_profile(), 8.0, 1.0, 0.5, levels=10, check=False)
    for k in (0, 1):
        assert abs(partial_log_products(s, 200)[k] - partial_log_products(s, 400)[k]) < 1e-8
    lp = limit_products(s)
    assert lp.mu_tilde <= 1 <= lp.nu_tilde
    assert lp.mu_tilde == pytest.approx(math.exp(partial_log_products(s, 2000)[0]), rel=1e-9)
    assert (lp.omega1, lp.omega2, lp.omega3) == (2 * lp.omega, 3 * lp.omega, 2 * lp.omega)


def test_linf_bounds():
    prof = ladder_profile()
    _, incl = moser_alpha0_min(prof)
    s = build_schedule(prof, incl + 1, 1.0, 0.5)
    lp = limit_products(s)
    b1 = linf_bound(s, lp, 1.0, 2.0)
    b2 = linf_bound(s, lp, 1.0, 3.0)
    assert 0 < b1 < b2
    assert linf_bound(s, lp, 1.0, 0.0) == 0.0
    small = linf_bound_from_data(s, lp, 1.0, 2.0, 0.5, small_data=True)
    general = linf_bound_from_data(s, lp, 1.0, 2.0, 0.5, C0=1e-8)
    assert small > 0 and general > 0
    with pytest.raises(ValueError):
        linf_bound_from_data(s, lp, 1.0, 2.0, 0.5)


def test_schedule_rejects_non_moser_profile():
    prof = build_profile(2 / 3, 5 / 12, 3, 0.0, p=(1.1, 1.1, 1.3, 1.3))
    with pytest.raises(AdmissibilityError, match="kappa_"):
        build_schedule(prof, 100.0, 1.0, 0.5)
