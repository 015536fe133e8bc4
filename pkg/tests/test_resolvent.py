import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from halfline.families import bump, random_nonnegative
from halfline.kernel import KernelParams
from halfline.resolvent import (ResolventQuery, apply_resolvent, boundary_trace,
                                dissipativity_check, green, resolvent_values)
from halfline.spaces import sample, weighted_norm
from halfline.verify import laplace_function_defect, laplace_kernel_defect


def test_closed_form():
    # sinh(0.5) e^-1; a digit slip in a published example gives 0.1917103
    assert green(KernelParams(0.0), 1.0, 0.5, 1.0) == pytest.approx(math.sinh(0.5) / math.e, rel=1e-14)
    assert green(KernelParams(0.0), 1.0, 0.5, 1.0) == pytest.approx(0.19170024978210181, rel=1e-14)


def test_frozen_value():
    # mpmath at 40 digits
    assert green(KernelParams(0.5), 2.0, 0.4, 1.1) == pytest.approx(0.14111526930100600, rel=1e-13)


def test_domain():
    with pytest.raises(ValueError):
        green(KernelParams(0.0), -1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        green(KernelParams(0.0), 1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        ResolventQuery(KernelParams(0.0), 0.0, None)


@given(st.sampled_from([-1.0, 0.0, 0.5]), st.floats(0.1, 10), st.floats(1e-3, 20))
def test_diagonal_continuity(kappa, lam, x):
    p = KernelParams(kappa)
    d = green(p, lam, x, x)
    # the log-slope of G is at most nu + sqrt(lam) x < 70 here
    assert green(p, lam, x, x * (1 + 1e-15)) == pytest.approx(d, rel=1e-13)
    assert green(p, lam, x * (1 + 1e-15), x) == pytest.approx(d, rel=1e-13)


@given(st.sampled_from([-1.0, 0.0, 0.5]), st.floats(0.1, 10), st.floats(1e-3, 20), st.floats(1e-3, 20))
def test_symmetry(kappa, lam, x, r):
    p = KernelParams(kappa)
    assert green(p, lam, x, r) == pytest.approx(green(p, lam, r, x), rel=1e-13)


def test_green_ode_order_two():
    p, lam, r, x = KernelParams(0.3), 1.5, 2.0, 0.9
    res = []
    hs = [0.02, 0.01, 0.005]
    for h in hs:
        g0, gp, gm = (green(p, lam, v, r) for v in (x, x + h, x - h))
        d2 = (gp - 2 * g0 + gm) / h**2
        d1 = (gp - gm) / (2 * h)
        res.append(abs(lam * g0 - d2 - p.kappa / x * d1))
    order = np.polyfit(np.log(hs), np.log(res), 1)[0]
    assert order == pytest.approx(2.0, abs=0.1)


def test_reconstruction(grid):
    p, lam = KernelParams(0.2), 1.0
    g = sample(lambda x: bump(x, 2.0, 1.0), grid, 1.0)
    x = np.array([1.4, 2.0, 2.5])
    errs = []
    for h in (0.02, 0.01):
        f0, fp, fm = (resolvent_values(p, lam, g, x + s) for s in (0, h, -h))
        lhs = lam * f0 - (fp - 2 * f0 + fm) / h**2 - p.kappa / x * (fp - fm) / (2 * h)
        errs.append(np.max(np.abs(lhs - bump(x, 2.0, 1.0))))
    assert errs[1] < errs[0] / 3.5 and errs[1] < 1e-3


def test_laplace_kernel_identity():
    for kappa in (0.0, -1.0, 0.5):
        assert laplace_kernel_defect(KernelParams(kappa), 1.0) < 1e-5


def test_laplace_function_identity(grid):
    g = sample(lambda x: bump(x, 2.0, 1.0), grid, 1.0)
    assert laplace_function_defect(KernelParams(0.2), 1.0, g, np.array([0.5, 1.5, 2.5, 4.0])) < 1e-4


def test_dirichlet_boundary(grid):
    g = sample(lambda x: bump(x, 2.0, 1.0), grid, 1.0)
    f = apply_resolvent(ResolventQuery(KernelParams(0.0), 1.0, g))
    assert abs(f.values[0]) < 1e-5
    tr = boundary_trace(KernelParams(0.0), 1.0, f)
    assert tr.converged and abs(tr.value) < 1e-4


def test_trace_examples(grid):
    p = KernelParams(0.2)
    g = sample(lambda x: bump(x, 2.0, 1.0), grid, 0.7)
    tr = boundary_trace(p, 0.7, apply_resolvent(ResolventQuery(p, 1.0, g)))
    assert tr.converged and abs(tr.value) < 1e-4
    assert tr.exponent == pytest.approx(0.7 - 0.2, abs=1e-6)
    bad = boundary_trace(KernelParams(0.0), 0.5, sample(np.ones_like, grid, 0.5))
    assert not bad.converged and math.isinf(bad.value)
    lin = boundary_trace(KernelParams(0.0), 1.0, sample(lambda x: x, grid, 1.0))
    assert lin.converged and abs(lin.value) < 1e-12


def test_trace_needs_small_nodes():
    from halfline.spaces import make_geometric_grid
    g = make_geometric_grid(1e-2, 10, 5, 4)
    with pytest.raises(ValueError):
        boundary_trace(KernelParams(0.0), 1.0, sample(lambda x: x, g, 1.0))


@pytest.mark.parametrize("kappa,m,lam", [(0.0, 1.0, 1.0), (0.1, 0.6, 1.0)])
def test_dissipativity_examples(grid, kappa, m, lam):
    g = sample(lambda x: bump(x, 2.0, 1.0), grid, m)
    res = dissipativity_check(KernelParams(kappa), m, lam, g)
    assert res.passed and abs(res.measured) < 1e-10
    zero = dissipativity_check(KernelParams(kappa), m, lam, g.with_values(0 * g.values))
    assert zero.measured == 0 and zero.passed


def test_dissipativity_range(grid):
    g = sample(lambda x: bump(x, 2.0, 1.0), grid, 0.0)
    with pytest.raises(ValueError):
        dissipativity_check(KernelParams(0.1), 0.0, 1.0, g)


@settings(max_examples=8)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(0.0, 1.0), (0.1, 0.6), (-1.0, 0.0)]),
       st.floats(0.5, 4.0))
def test_positivity_contraction_identity(seed, km, lam):
    from halfline.spaces import make_grid
    grid = make_grid()
    kappa, m = km
    p = KernelParams(kappa)
    g = sample(random_nonnegative(np.random.default_rng(seed)), grid, m)
    f = apply_resolvent(ResolventQuery(p, lam, g))
    assert np.min(f.values) >= 0
    assert lam * weighted_norm(f).value <= (1 + 1e-8) * weighted_norm(g).value
    mu = 2 * lam
    fm = apply_resolvent(ResolventQuery(p, mu, g))
    both = apply_resolvent(ResolventQuery(p, lam, fm))
    d = (lam - mu) * both.values - (fm.values - f.values)
    assert weighted_norm(f.with_values(d)).value <= 1e-7 * weighted_norm(f).value
