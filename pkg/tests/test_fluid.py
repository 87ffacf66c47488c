import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from forchflow.fluid import (Drift, FluidModelError, ProblemData, check_A3, constant_data,
                             derive_parameters, gravity_drift, validate_assumptions,
                             volumetric_flux_data, zero_data, zero_drift)


def test_isentropic_parameters():
    m = derive_parameters("isentropic", gamma=1.4, cbar=2.0)
    assert m.lam == pytest.approx(5 / 12, abs=1e-15)
    assert m.ell == pytest.approx(5 / 6, abs=1e-15)
    assert m.c == pytest.approx((2.4 / 2.8) ** (5 / 6), rel=1e-14)
    assert m.gamma == pytest.approx(1.4)
    assert m.delta == pytest.approx(7 / 12)


def test_ideal_is_isentropic_gamma_one():
    m = derive_parameters("ideal", cbar=1.0)
    assert (m.lam, m.ell, m.c) == (0.5, 1.0, 2.0)
    assert m.kind == "ideal"
    with pytest.raises(FluidModelError):
        derive_parameters("ideal", gamma=1.4)


def test_slightly_compressible():
    m = derive_parameters("slightly_compressible", kappa=2.0)
    assert (m.lam, m.ell, m.c) == (1.0, 2.0, 0.25)
    assert m.gamma is None


@pytest.mark.parametrize("kw", [dict(kind="isentropic"), dict(kind="isentropic", gamma=-1),
                                dict(kind="isentropic", gamma=1.4, cbar=0),
                                dict(kind="slightly_compressible", kappa=0),
                                dict(kind="plasma")])
def test_bad_fluids(kw):
    with pytest.raises(FluidModelError):
        derive_parameters(**kw)


def test_drift_values_and_sign():
    m = derive_parameters("ideal", gravity=(0.0, -2.0))
    Z = gravity_drift(m)
    u = np.array([0.0, 1.0, 3.0])
    np.testing.assert_allclose(Z(u), [[0, 0], [0, 4.0], [0, 12.0]])
    Zp = gravity_drift(m, sign=1.0)
    np.testing.assert_allclose(Zp(u), -Z(u))
    assert Z.d0 == pytest.approx(4.0) and Z.ell_Z == 1.0 and Z.d4 == pytest.approx(4.0)
    assert zero_drift(1.5, 2).is_zero and not Z.is_zero


def test_drift_derivative_fd():
    Z = Drift(0.7, 5 / 6, (0.3, -1.0))
    u = np.linspace(0.2, 3.0, 9)
    h = 1e-6
    np.testing.assert_allclose(Z.derivative(u), (Z(u + h) - Z(u - h)) / (2 * h), rtol=1e-7)


def test_zero_and_constant_data():
    Z = zero_drift()
    x = np.zeros((4, 1))
    d = zero_data(Z)
    assert np.all(d.B(x, 0.0) == 0) and np.all(d.f(x, 0.0) == 0)
    c = constant_data(Z, B0=-0.5, f0=2.0)
    np.testing.assert_array_equal(c.B(x, 1.0), -0.5)
    np.testing.assert_array_equal(c.phi1(x, 1.0), 0.5)
    np.testing.assert_array_equal(c.f1(x, 1.0), 2.0)


def test_volumetric_flux_data():
    Z = zero_drift()
    d = volumetric_flux_data(Z, lambda x, t: np.full(len(x), -0.3), lam=0.5)
    x = np.zeros((3, 1))
    u = np.array([0.0, 1.0, 4.0])
    np.testing.assert_allclose(d.B(x, 0.0, u), [0.0, -0.3, -0.6])
    assert d.ell_B == 0.5
    np.testing.assert_allclose(d.phi2(x, 0.0), 0.3)


def test_check_A3_exact():
    assert check_A3(1.05, 1.0).passed
    assert not check_A3(1.0, 1.0).passed
    # isentropic gravity drift: 2 ell = 4 lam > lam + 1 iff lam > 1/3
    assert check_A3(5 / 6, 5 / 12).passed
    assert not check_A3(0.5, 0.25).passed
    assert check_A3(0.75, 0.49).passed


def test_validate_assumptions_pass_and_fail():
    m = derive_parameters("isentropic", gamma=1.4, gravity=(1.0,))
    Z = gravity_drift(m)
    pts = np.array([[0.0], [1.0]])
    good = constant_data(Z, B0=0.2, f0=-1.0)
    rep = validate_assumptions(good, m, level=("A1", "A2"), boundary_points=pts,
                               interior_points=pts, times=(0.0, 1.0))
    assert rep.passed, rep.failures()
    bad = ProblemData(Z=Z, B=lambda x, t, u: np.full(len(x), 1.0) + u,
                      f=lambda x, t, u: np.zeros(len(x)), ell_B=0.5,
                      phi1=lambda x, t: np.ones(len(x)),
                      phi2=lambda x, t: np.ones(len(x)))
    rep = validate_assumptions(bad, m, boundary_points=pts)
    assert not rep.passed
    assert any("B <=" in c.name for c in rep.failures())
    assert rep.as_dict()["passed"] is False


def test_validate_A3_in_report():
    m = derive_parameters("slightly_compressible", kappa=1.0)
    Z = Drift(1.0, 1.0, (0.0,))
    rep = validate_assumptions(zero_data(Z), m, level="A1+A2+A3")
    assert not rep.passed  # 2*1 > 1+1 fails
    assert rep.failures()[0].name.startswith("A3")


@given(st.floats(0.05, 20.0), st.floats(0.1, 10.0))
def test_isentropic_invariants(gamma, cbar):
    m = derive_parameters("isentropic", gamma=gamma, cbar=cbar)
    assert 0 < m.lam < 1
    assert math.isclose(m.ell, 2 * m.lam)
    assert math.isclose(m.gamma, gamma, rel_tol=1e-12)
    assert m.c > 0
