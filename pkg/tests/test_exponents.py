import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from forchflow.constitutive import ForchheimerLaw
from forchflow.exponents import (ETA0_TERMS, AdmissibilityError, AssumptionError, DataNorms,
                                 build_profile, check_alpha, conjugate, default_p,
                                 exchange_p_limit, exponent_report, gradsec_profile,
                                 moser_exchange_ok, nu_family, profile_for, render_table,
                                 lebesgue_bound, upsilon)
from forchflow.fluid import derive_parameters, zero_data, zero_drift

# gamma = 1.4 three-term gas in 3D: a = 2/3, lam = 5/12
A, LAM, N = F(2, 3), F(5, 12), 3
P_EXAMPLE = (F(26, 25), F(26, 25), F(11, 10), F(11, 10))


def gas_profile(ell_Z=5 / 6, p=tuple(float(x) for x in P_EXAMPLE), **kw):
    return build_profile(float(A), float(LAM), N, ell_Z, p=p, **kw)


def exact_eta0(a, lam, n, lZ, lB, lf, p):
    """Independent exact transcription of the nine candidates."""
    p1, p2, p3, p4 = p
    d = 1 - lam
    kB, kf = 1 + (1 - a) / n, 1 + (2 - a) / n
    q1, q2 = p1 / (p1 - 1), p2 / (p2 - 1)
    return [q1 * lam, q2 * (lam - lB), n * (lZ - 1),
            (a - d - p1 * lam) / (kf - p1), (a - d + p2 * (lB - lam)) / (kf - p2),
            (a - d - p1 * lam) / (kB - p1), (a - d + p2 * (lB - lam)) / (kB - p2),
            (a - d - p3 * lam) / (kf - p3), (a - d + p4 * (lf - lam)) / (kf - p4)]


def test_golden_values_exact_rationals():
    prof = gas_profile()
    d = 1 - LAM
    assert N * (A - d) / (2 - A) == F(3, 16)
    assert prof.alpha_star == pytest.approx(3 / 16, abs=1e-15)
    assert prof.kappa_f == pytest.approx(13 / 9, abs=1e-15)
    assert prof.kappa_B == pytest.approx(10 / 9, abs=1e-15)
    k2 = 1 + (2 - A) / N - (A - d) / 2
    assert k2 == F(101, 72)
    assert prof.kappa(2.0) == pytest.approx(101 / 72, abs=1e-15)
    ks = max(((2 - A) * P_EXAMPLE[0] - 1) / (1 - A), P_EXAMPLE[2])
    assert ks == F(29, 25)
    assert prof.kappa_star == pytest.approx(1.16, abs=1e-14)
    kt2 = (ks ** 2 + F(13, 9)) / 2
    assert kt2 == F(7847, 5625)
    assert prof.kappa_tilde == pytest.approx(math.sqrt(7847 / 5625), abs=1e-12)


def test_eta0_against_exact_transcription():
    lZ = F(5, 6)
    prof = gas_profile(float(lZ))
    ref = exact_eta0(A, LAM, N, lZ, F(0), F(0), P_EXAMPLE)
    np.testing.assert_allclose(prof.eta0_terms, [float(r) for r in ref], rtol=1e-13)
    assert prof.eta0 == pytest.approx(float(max(ref)), rel=1e-14)
    assert prof.eta0_binding == int(np.argmax([float(r) for r in ref]))
    assert len(ETA0_TERMS) == 9


def test_a_greater_delta_rejection_ideal_two_term():
    m = derive_parameters("ideal")
    law = ForchheimerLaw.two_term()
    with pytest.raises(AdmissibilityError) as ei:
        profile_for(law, m, zero_data(zero_drift()), 1)
    assert ei.value.condition == "a > delta"


def test_moser_exchange_rejection():
    with pytest.raises(AdmissibilityError) as ei:
        gas_profile(p=(1.1, 1.1, 1.3, 1.3), require_moser=True)
    assert ei.value.condition == "kappa_*^2 < kappa_f"
    prof = gas_profile(p=(1.1, 1.1, 1.3, 1.3))
    assert not prof.moser_ok and math.isnan(prof.kappa_tilde)


def test_p_interval_rejection():
    with pytest.raises(AdmissibilityError, match="p1"):
        gas_profile(p=(1.2, 1.04, 1.1, 1.1))  # kappa_B = 10/9
    with pytest.raises(AdmissibilityError, match="p3"):
        gas_profile(p=(1.04, 1.04, 1.5, 1.1))


def test_default_p_inside_intervals():
    p = default_p(2 / 3, 3)
    assert 1 < p[0] < 10 / 9 and 1 < p[2] < 13 / 9


def test_check_alpha_conditions():
    prof = gas_profile()
    with pytest.raises(AdmissibilityError, match="alpha > eta0"):
        check_alpha(prof, prof.eta0)
    with pytest.raises(AdmissibilityError, match="max"):
        check_alpha(prof, 1.0)
    check_alpha(prof, prof.eta0 + 1)


def test_nu_family_relations():
    prof = gas_profile()
    alpha = 12.0
    fam = nu_family(prof, alpha)
    assert fam.nu1 == pytest.approx(alpha - prof.lam - 1)
    assert fam.nu3 == max(fam.mu)
    assert 0 < fam.theta < 1
    # nu2 = alpha + nu4 alpha and nu4 = (2-a) theta/(n (1-theta))
    assert fam.nu2 == pytest.approx(alpha * (1 + fam.nu4))
    assert fam.nu4 == pytest.approx((2 - prof.a) * fam.theta / (prof.n * (1 - fam.theta)))


def test_lebesgue_bound_closed_form_zero_data():
    prof = gas_profile()
    alpha, m0, C0 = 12.0, 3.7, 0.9
    b = lebesgue_bound(prof, alpha, m0, None, C0)
    nu4 = nu_family(prof, alpha).nu4
    C1 = 1 / (4 * C0 * nu4)
    assert b.V(0.0) == 1 + m0
    assert b.T_star == pytest.approx(C1 * (1 + m0) ** (-nu4), rel=1e-15)
    t = 0.5 * b.T_star
    expect = ((1 + m0) ** (-nu4) - t / C1) ** (-1 / nu4)
    assert b.V(t) == pytest.approx(expect, rel=1e-13)
    assert math.isinf(b.V(1.01 * b.T_star))


def test_lebesgue_bound_C0_zero():
    prof = gas_profile()
    b = lebesgue_bound(prof, 12.0, 2.0, None, 0.0)
    assert math.isinf(b.T_star) and b.V(5.0) == 3.0


def test_lebesgue_bound_piecewise_linear_upsilon():
    prof = gas_profile()
    t = np.array([0.0, 1.0, 2.0])
    y = np.array([0.0, 2.0, 2.0])
    b = lebesgue_bound(prof, 12.0, 0.5, (t, y), 1e-4)
    # int_0^1 (1 + 2s) ds = 2, then 3 per unit time
    level = b.C1 * b.base ** (-b.nu4)
    assert level > 2
    assert b.T_star == pytest.approx(1.0 + (level - 2.0) / 3.0, rel=1e-12)
    small = lebesgue_bound(prof, 12.0, 0.5, (t, y), 1.0 / (4 * b.nu4 * 1.0) * b.base ** (-b.nu4))
    # level = 1 lands inside the first segment: s + s^2 = 1
    assert small.T_star == pytest.approx((math.sqrt(5) - 1) / 2, rel=1e-12)


def test_data_norms_and_upsilon():
    q = (2.0, 2.0, 3.0, 3.0)
    t = np.array([0.0, 1.0])
    n = DataNorms(t, phi1=[1.0, 1.0], phi2=0.0, f1=[2.0, 0.0], f2=0.0, q=q)
    np.testing.assert_allclose(n.upsilon_series(), [1 + 8, 1])
    assert upsilon(n, 0.5) == pytest.approx(5.0)
    with pytest.raises(ValueError):
        upsilon(n, 2.0)
    assert n.spacetime_norms()[0] == pytest.approx(1.0)
    assert n.M0(0.5) > 1


def test_gradsec_requires_A3():
    with pytest.raises(AssumptionError):
        gradsec_profile(gas_profile(ell_Z=0.6))
    g = gradsec_profile(build_profile(0.5, 1.0, 1, 1.05, p=(1.1, 1.1, 1.3, 1.3)))
    assert g.eta6 == pytest.approx(2.0)  # lam = 1, ell_f = 0 limit
    assert g.eta5 == pytest.approx(2.0)


def test_report_and_table():
    prof = gas_profile()
    rep = exponent_report(prof, [12.0, 3.0])
    assert rep["exponents"]["alpha_star"]["value"] == pytest.approx(3 / 16)
    assert sum(e["binding"] for e in rep["eta0_terms"]) == 1
    assert rep["per_alpha"]["12.0"]["admissible"]
    assert not rep["per_alpha"]["3.0"]["admissible"]
    txt = render_table(rep)
    assert "<- binding" in txt and "kappa_f" in txt


@st.composite
def admissible_inputs(draw):
    n = draw(st.integers(1, 3))
    lam = draw(st.floats(0.1, 1.0))
    a = draw(st.floats(max(1 - lam, 0.0) + 0.02, 0.95))
    assume(a > 1 - lam)
    kB, kf = 1 + (1 - a) / n, 1 + (2 - a) / n
    u = draw(st.lists(st.floats(0.05, 0.95), min_size=4, max_size=4))
    p = (1 + u[0] * (kB - 1), 1 + u[1] * (kB - 1), 1 + u[2] * (kf - 1), 1 + u[3] * (kf - 1))
    lZ = draw(st.floats(0.0, 3.0))
    return a, lam, n, lZ, p


@given(admissible_inputs())
def test_exchange_equivalence_property(args):
    a, lam, n, lZ, p = args
    prof = build_profile(a, lam, n, lZ, p=p)
    lim = exchange_p_limit(a, n)
    # avoid float ties on the boundary
    assume(min(abs(p[0] - lim), abs(p[1] - lim), abs(p[2] - math.sqrt(prof.kappa_f)),
               abs(p[3] - math.sqrt(prof.kappa_f))) > 1e-9)
    assert moser_exchange_ok(p, a, n) == prof.moser_ok


@given(admissible_inputs())
def test_profile_invariants(args):
    a, lam, n, lZ, p = args
    prof = build_profile(a, lam, n, lZ, p=p)
    assert 1 < prof.kappa_B < prof.kappa_f
    assert prof.kappa_star > 1
    assert prof.eta0 == max(prof.eta0_terms)
    assert all(qi == pytest.approx(conjugate(pi)) for pi, qi in zip(prof.p, prof.q))
    if prof.moser_ok:
        assert prof.kappa_star < prof.kappa_tilde < math.sqrt(prof.kappa_f)


@given(admissible_inputs(), st.floats(0.0, 50.0), st.floats(1e-3, 10.0))
def test_V_monotone_property(args, m0, C0):
    prof = build_profile(*args[:4], p=args[4])
    alpha = max(prof.lebesgue_alpha_min(), prof.eta0) + 1.0
    b = lebesgue_bound(prof, alpha, m0, None, C0)
    assume(math.isfinite(b.T_star) and b.T_star > 0)
    ts = np.linspace(0, b.T_star, 50)[:-1]
    V = b.V(ts)
    assert V[0] == pytest.approx(1 + m0)
    assert np.all(np.diff(V) >= -1e-12 * V[1:])
    assert b.T_small < b.T_star
    b2 = lebesgue_bound(prof, alpha, m0, None, 2 * C0)
    assert b2.T_star == pytest.approx(b.T_star / 2, rel=1e-12)
