import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from halfline.families import bump, gaussian
from halfline.kernel import (KernelOverflowError, KernelParams, SectorError, SectorPoint,
                             apply_semigroup, fit_gaussian_constants, gaussian_bound_check,
                             gaussian_envelope, heat_kernel, kernel_z_derivative,
                             semigroup_matrix, semigroup_values, _exp_checked)
from halfline.spaces import sample, weighted_norm


def dirichlet(t, x, r):
    return (np.exp(-(x - r) ** 2 / (4 * t)) - np.exp(-(x + r) ** 2 / (4 * t))) / math.sqrt(4 * math.pi * t)


def test_params():
    assert KernelParams(0.2).nu == 0.4
    with pytest.raises(ValueError):
        KernelParams(1.0)


def test_sector_point():
    z = SectorPoint.of(0.3 * np.exp(0.4j))
    assert z.modulus == pytest.approx(0.3) and z.phase == pytest.approx(0.4)
    assert SectorPoint.of(2.0).is_real
    with pytest.raises(SectorError):
        SectorPoint(1.0, math.pi / 2)
    with pytest.raises(SectorError):
        SectorPoint(0.0)


def test_closed_form_value():
    # (1 - e^-1)/(2 sqrt(pi)); a digit slip in a published example gives 0.1783138
    assert heat_kernel(KernelParams(0.0), 1.0, 1.0, 1.0) == pytest.approx(0.17831791741872947, rel=1e-14)


def test_frozen_values():
    # mpmath at 40 digits from the defining Bessel formula
    assert heat_kernel(KernelParams(0.5), 0.1, 0.3, 0.7) == pytest.approx(0.77005062710765400, rel=1e-13)
    assert heat_kernel(KernelParams(-1.0), 0.5, 1.0, 2.0) == pytest.approx(0.13056742402402786, rel=1e-13)
    v = heat_kernel(KernelParams(0.5), 0.4 * np.exp(0.5j), 1.0, 1.3)
    assert v == pytest.approx(0.48124430374382483 - 0.10292400343637898j, rel=1e-13)


def test_dirichlet_oracle():
    x = np.linspace(0.05, 5, 30)
    X, R = np.meshgrid(x, x, indexing="ij")
    for t in (0.01, 0.1, 1.0):
        ex = dirichlet(t, X, R)
        ok = ex > 1e-300
        assert np.max(np.abs(heat_kernel(KernelParams(0.0), t, X, R)[ok] / ex[ok] - 1)) < 1e-10


def test_symmetry_example():
    p = KernelParams(-1.0)
    lhs = 1.0 ** -1 * heat_kernel(p, 0.5, 1.0, 2.0)
    rhs = 2.0 ** -1 * heat_kernel(p, 0.5, 2.0, 1.0)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_positive_example():
    assert heat_kernel(KernelParams(0.5), 0.1, 0.3, 0.7) > 0


def test_no_overflow_at_small_time():
    v = heat_kernel(KernelParams(0.3), 1e-6, 40.0, 40.0)
    assert np.isfinite(v) and v > 0


def test_overflow_reported():
    with pytest.raises(KernelOverflowError):
        _exp_checked(np.array([1.0, 800.0]))


@given(st.sampled_from([-1.0, 0.0, 0.5, 0.9]), st.floats(1e-2, 10), st.floats(-1.2, 1.2),
       st.floats(0.05, 5), st.floats(0.05, 5))
def test_symmetry_property(kappa, t, phase, x, r):
    p = KernelParams(kappa)
    z = SectorPoint(t, phase)
    a = x**kappa * heat_kernel(p, z, x, r)
    b = r**kappa * heat_kernel(p, z, r, x)
    if abs(a) > 1e-280:
        assert abs(a - b) <= 1e-12 * abs(a)


@given(st.sampled_from([-1.0, 0.0, 0.5, 0.9]), st.floats(1e-2, 10), st.floats(1e-3, 20),
       st.floats(1e-3, 20))
def test_positivity_property(kappa, t, x, r):
    assert heat_kernel(KernelParams(kappa), t, x, r) >= 0


def test_gaussian_bound():
    p = KernelParams(0.0)
    C, s = fit_gaussian_constants(p)
    x = np.geomspace(1e-3, 20, 50)
    X, R = np.meshgrid(x, x, indexing="ij")
    assert gaussian_bound_check(p, 1.0, X, R, C, s)
    assert not gaussian_bound_check(p, 1.0, X, R, 0.0, s)
    # on the diagonal the exponential factor is 1
    env = gaussian_envelope(p, 4.0, 3.0, 3.0, 1.0, s)
    assert env == pytest.approx(1 / 2 * min(3 / 2, 1) * min(3 / 2, 1))


def test_z_derivative_matches_differences():
    p = KernelParams(0.0)
    h = 1e-5
    fd = (heat_kernel(p, 1 + h, 1.0, 1.0) - heat_kernel(p, 1 - h, 1.0, 1.0)) / (2 * h)
    assert kernel_z_derivative(p, 1.0, 1.0, 1.0) == pytest.approx(fd, rel=1e-6)


def test_z_derivative_small_x_slope():
    p = KernelParams(0.3)
    x = np.geomspace(1e-6, 1e-4, 5)
    d = np.abs(kernel_z_derivative(p, 0.7 * np.exp(0.3j), x, 1.2))
    slope = np.polyfit(np.log(x), np.log(d), 1)[0]
    assert slope == pytest.approx(1 - p.kappa, abs=1e-3)


@given(st.sampled_from([-1.0, 0.0, 0.5]), st.floats(0.05, 5), st.floats(-1.0, 1.0),
       st.floats(0.1, 4), st.floats(0.1, 4))
def test_z_derivative_property(kappa, t, phase, x, r):
    p = KernelParams(kappa)
    z = t * np.exp(1j * phase)
    h = 1e-5 * t
    fd = (heat_kernel(p, z + h, x, r) - heat_kernel(p, z - h, x, r)) / (2 * h)
    an = kernel_z_derivative(p, z, x, r)
    k = abs(heat_kernel(p, z, x, r)) / t
    assert abs(an - fd) <= 1e-5 * max(abs(an), k) + 1e-300


def test_semigroup_on_dirichlet(grid):
    f = sample(lambda x: gaussian(x, 2.0, 0.5), grid, 1.0)
    xs = np.array([0.5, 1.0, 2.0, 3.5])
    u = semigroup_values(KernelParams(0.0), 0.25, f, xs)
    from scipy.integrate import quad
    ref = [quad(lambda r: dirichlet(0.25, x, r) * gaussian(r, 2.0, 0.5), 0, 10, epsabs=0,
                epsrel=1e-13, limit=200)[0] for x in xs]
    assert np.allclose(u, ref, rtol=1e-10, atol=0)


def test_semigroup_law_and_small_time(grid):
    p = KernelParams(0.5)
    f = sample(lambda x: bump(x, 2.0, 1.0), grid, 1.0)
    a = apply_semigroup(p, 0.3, f)
    b = apply_semigroup(p, 0.1, apply_semigroup(p, 0.2, f))
    nf = weighted_norm(f).value
    assert weighted_norm(a.with_values(a.values - b.values)).value <= 1e-6 * nf
    gaps = [weighted_norm(f.with_values(apply_semigroup(p, t, f).values - f.values)).value / nf
            for t in (1e-2, 1e-3, 1e-4)]
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 0.02


def test_semigroup_law_complex(grid):
    p = KernelParams(0.0)
    f = sample(lambda x: gaussian(x, 2.0, 0.5), grid, 1.0)
    z1, z2 = 0.1 * np.exp(0.5j), 0.2 * np.exp(-0.3j)
    a = apply_semigroup(p, z1 + z2, f)
    b = apply_semigroup(p, z1, apply_semigroup(p, z2, f))
    assert weighted_norm(a.with_values(a.values - b.values)).value <= 1e-6 * weighted_norm(f).value


def test_contraction_and_positivity(grid):
    p = KernelParams(0.0)
    f = sample(lambda x: bump(x, 3.0, 1.0), grid, 0.5)
    for t in (0.1, 1.0, 10.0):
        u = apply_semigroup(p, t, f)
        assert np.min(u.values) >= 0
        assert weighted_norm(u).value <= (1 + 1e-8) * weighted_norm(f).value


def test_matrix_matches_apply(grid):
    p = KernelParams(0.2)
    f = sample(lambda x: gaussian(x, 2.0, 0.5), grid, 1.0)
    mat = semigroup_matrix(p, 0.2, grid)
    assert np.allclose(mat @ f.values, apply_semigroup(p, 0.2, f).values, rtol=1e-10, atol=1e-14)


def test_generation_range_warning(grid):
    f = sample(lambda x: gaussian(x, 2.0, 0.5), grid, 1.5)
    with pytest.warns(RuntimeWarning):
        apply_semigroup(KernelParams(0.0), 0.1, f)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        apply_semigroup(KernelParams(0.0), 0.1, f.with_values(f.values, 1.0))


def test_zero_input(grid):
    f = sample(lambda x: 0 * x, grid, 1.0)
    assert np.all(apply_semigroup(KernelParams(0.0), 0.1, f).values == 0)
