import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from halfline.bessel import (BesselDomainError, BesselOrder, ScaledValue, bessel_i, bessel_k,
                             derivatives_i, log_bessel_i, log_bessel_ie, log_bessel_k,
                             ode_residual, wronskian)

XS = np.geomspace(1e-8, 700, 400)


def test_i_at_zero():
    assert bessel_i(0.0, 0.0).value() == 1.0


def test_half_order_closed_forms():
    assert bessel_i(0.5, 1.0).value() == pytest.approx(math.sqrt(2 / math.pi) * math.sinh(1), rel=1e-12)
    assert bessel_k(0.5, 1.0).value() == pytest.approx(math.sqrt(math.pi / 2) / math.e, rel=1e-12)


def test_frozen_values():
    # mpmath at 40 digits
    assert bessel_i(0.3, 5.5).value() == pytest.approx(42.305335496172108, rel=1e-13)
    assert bessel_k(1.7, 0.2).value() == pytest.approx(22.464359638763551, rel=1e-13)
    assert log_bessel_i(2.5, 650.0) == pytest.approx(645.83795635045189, rel=1e-14)


def test_large_argument_shape():
    i = bessel_i(0.25, 30.0).scaled(30.0) * math.sqrt(2 * math.pi * 30)
    k = bessel_k(0.3, 20.0).value() * math.exp(20) * math.sqrt(20 / (math.pi / 2))
    assert i == pytest.approx(1, rel=0.01)
    assert k == pytest.approx(1, rel=0.01)
    assert i == pytest.approx(1.0031840311141354, rel=1e-12)
    assert k == pytest.approx(0.99610283952402038, rel=1e-12)


def test_small_argument_k1():
    x = np.array([1e-6, 1e-7, 1e-8])
    assert np.allclose(x * bessel_k(1.0, x).value(), 1.0, rtol=1e-10)


@pytest.mark.parametrize("nu", [0.0, 0.1, 0.25, 0.5, 1.3, 2.7, 7.5])
def test_against_scipy(nu):
    li = log_bessel_i(nu, XS)
    lk = log_bessel_k(nu, XS)
    ref_i = np.log(special.ive(nu, XS)) + XS
    ref_k = np.log(special.kve(nu, XS)) - XS
    assert np.max(np.abs(np.expm1(li - ref_i))) < 1e-12
    assert np.max(np.abs(np.expm1(lk - ref_k))) < 1e-12


def test_complex_sector_value():
    z = 3 * np.exp(0.25j * np.pi)
    v = bessel_i(0.5, z).value()
    assert v == pytest.approx(-0.27964468588674722 + 1.9137730765575753j, rel=1e-13)


def test_scaled_log_consistency():
    z = np.geomspace(1e-3, 600, 50) * np.exp(0.7j)
    assert np.allclose(log_bessel_ie(0.3, z), log_bessel_i(0.3, z) - z, atol=1e-12)


def test_wronskian_anchors():
    assert wronskian(0.25, 1.0) == pytest.approx(-1.0, rel=1e-10)
    assert wronskian(0.5, 2.0) == pytest.approx(-0.5, rel=1e-10)


def test_derivative_recurrence():
    _, d1, _ = derivatives_i(0.0, 1.0)
    assert d1 == pytest.approx(special.iv(1, 1.0), rel=1e-13)


def test_positivity():
    x = np.geomspace(1e-6, 600, 200)
    for nu in (0.1, 0.5, 1.3):
        assert np.all(bessel_i(nu, x).value() > 0)
        assert np.all(bessel_k(nu, x).mantissa > 0)


def test_unscaling_matches_direct():
    x = np.geomspace(1e-3, 100, 40)
    v = bessel_i(0.7, x)
    assert np.allclose(v.value(), special.iv(0.7, x), rtol=1e-13)
    assert np.all((np.abs(v.mantissa) >= 0.5) & (np.abs(v.mantissa) < 2))


def test_domain_errors():
    with pytest.raises(BesselDomainError):
        BesselOrder(-1.0)
    with pytest.raises(BesselDomainError):
        bessel_k(0.5, 0.0)
    with pytest.raises(BesselDomainError):
        bessel_k(0.5, 1j)
    with pytest.raises(BesselDomainError):
        bessel_i(0.5, 1j)
    with pytest.raises(BesselDomainError):
        bessel_i(0.5, -1.0)
    with pytest.raises(BesselDomainError):
        wronskian(0.5, -1.0)


def test_zero_mantissa_encoding():
    s = ScaledValue.from_log(np.array([-np.inf, 0.0]))
    assert s.mantissa[0] == 0 and s.value()[1] == 1.0


@given(st.floats(0.0, 5.0), st.floats(1e-6, 600))
def test_wronskian_property(nu, x):
    assert abs(x * wronskian(nu, x) + 1) < 1e-10


@given(st.floats(0.0, 3.0), st.floats(1e-3, 500))
def test_ode_residual_property(nu, x):
    assert ode_residual(nu, x, "i") < 1e-9
    assert ode_residual(nu, x, "k") < 1e-9


@given(st.floats(0.05, 2.0), st.floats(0.5, 200))
def test_sector_continuity(nu, r):
    phases = np.linspace(-np.pi / 3, np.pi / 3, 401)
    v = log_bessel_i(nu, r * np.exp(1j * phases))
    # unwrap the imaginary part; the real part of log I is Lipschitz in phase with constant ~ r
    jumps = np.abs(np.diff(np.real(v)))
    assert np.max(jumps) < (r + 2) * (phases[1] - phases[0]) * 1.5


@given(st.floats(0.0, 4.0), st.floats(1e-6, 650))
def test_i_increasing_in_x_decreasing_in_nu(nu, x):
    assert log_bessel_i(nu, x * 1.01) > log_bessel_i(nu, x)
    assert log_bessel_i(nu + 0.5, x) < log_bessel_i(nu, x)
    assert log_bessel_k(nu, x * 1.01) < log_bessel_k(nu, x)


@pytest.mark.parametrize("nu", [1e-300, 4e-266, 1e-60, 1e-41])
def test_k_tiny_order_matches_order_zero(nu):
    # mpmath: besselk(0, 1) = 0.42102443824070834
    assert float(bessel_k(BesselOrder(nu), 1.0).value()) == pytest.approx(0.42102443824070834, rel=1e-14)
