import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from halfline.absorption import (Potential, PotentialError, evolve_absorbed, general_absorbed,
                                 parse_potential, pulled_back_potential, splitting_defect,
                                 truncated_convergence)
from halfline.families import gaussian, random_nonnegative
from halfline.kernel import KernelParams, apply_semigroup
from halfline.reduce import OperatorSpec
from halfline.spaces import sample, weighted_norm

P = KernelParams(0.0)


@pytest.fixture(scope="module")
def f(grid):
    return sample(lambda x: gaussian(x, 3.0, 0.7), grid, 0.5)


def test_vocabulary():
    x = np.array([0.5, 2.0])
    assert np.array_equal(parse_potential("zero")(x), [0, 0])
    assert np.array_equal(parse_potential("const:1.5")(x), [1.5, 1.5])
    assert np.array_equal(parse_potential("linear:2")(x), [1, 4])
    assert np.allclose(parse_potential("power:1,0.5")(x), np.sqrt(x))
    for bad in ("sin:1", "const:", "const:a", "power:1", "zero:1"):
        with pytest.raises(PotentialError):
            parse_potential(bad)
    with pytest.raises(PotentialError):
        parse_potential("const:-1")(x)
    with pytest.raises(PotentialError):
        parse_potential("linear:1").truncated(0)
    assert np.array_equal(parse_potential("linear:1").truncated(1.0)(x), [0.5, 1.0])


def test_zero_potential_is_semigroup(f):
    u = evolve_absorbed(P, parse_potential("zero"), 0.5, 8, f)
    assert np.array_equal(u.values, apply_semigroup(P, 0.5, f).values)
    v = evolve_absorbed(P, parse_potential("zero"), 0.5, 8, f, merge_commuting=False)
    assert np.max(np.abs(v.values - u.values)) < 1e-10


def test_constant_potential(f):
    for merge in (True, False):
        u = evolve_absorbed(P, parse_potential("const:0.7"), 0.5, 8, f, merge_commuting=merge)
        ref = math.exp(-0.35) * apply_semigroup(P, 0.5, f).values
        assert np.max(np.abs(u.values - ref)) < 1e-10


def test_domination_and_monotonicity(f):
    u0 = apply_semigroup(P, 0.5, f).values
    strong = evolve_absorbed(P, parse_potential("linear:1"), 0.5, 16, f)
    weak = evolve_absorbed(P, Potential(lambda x: x / (1 + x)), 0.5, 16, f)
    err = max(splitting_defect(P, parse_potential("linear:1"), 0.5, 16, f),
              splitting_defect(P, Potential(lambda x: x / (1 + x)), 0.5, 16, f))
    assert np.min(strong.values) >= -2 * err
    assert np.max(strong.values - u0) <= 2 * err
    assert np.max(strong.values - weak.values) <= 2 * err
    assert weighted_norm(strong).value <= weighted_norm(f).value


def test_strang_order(f):
    om = Potential(lambda x: x / (1 + x))
    steps = [4, 8, 16, 32]
    us = [evolve_absorbed(P, om, 0.5, n, f, merge_commuting=False).values for n in steps]
    d = [weighted_norm(f.with_values(a - b)).value for a, b in zip(us, us[1:])]
    order = -np.polyfit(np.log(steps[:-1]), np.log(d), 1)[0]
    assert order == pytest.approx(2.0, abs=0.2)


def test_truncation_examples(grid):
    g = sample(lambda x: gaussian(x, 8.0, 3.0), grid, 0.5)
    res = truncated_convergence(P, parse_potential("linear:1"), 1.0, g, (1, 2, 4, 8, 16))
    d = res.detail["defects"]
    assert res.passed and all(b < a for a, b in zip(d, d[1:]))
    bounded = truncated_convergence(P, Potential(lambda x: np.minimum(x, 1.0)), 0.2, g, (1, 2),
                                    steps=4, reference_level=4)
    assert bounded.detail["defects"] == [0.0, 0.0]
    zero = truncated_convergence(P, parse_potential("linear:1"), 0.2, g.with_values(0 * g.values),
                                 (1, 2), steps=4)
    assert zero.detail["defects"] == [0.0, 0.0] and zero.passed
    with pytest.raises(ValueError):
        truncated_convergence(P, parse_potential("linear:1"), 0.2, g, (2, 1))


def test_preconditions(f, grid):
    with pytest.raises(ValueError):
        evolve_absorbed(P, parse_potential("zero"), 0.5, 0, f)
    with pytest.raises(ValueError):
        evolve_absorbed(P, parse_potential("zero"), 0.0, 2, f)
    with pytest.raises(ValueError):
        evolve_absorbed(P, parse_potential("zero"), 0.5, 2, sample(np.exp, grid, 0.0))


def test_pullback_formula():
    om = pulled_back_potential(OperatorSpec(1.0, 1.0, -1.0), parse_potential("linear:1"))
    x = np.array([0.3, 1.0, 2.5])
    assert np.allclose(om(x), 4 * x**2, rtol=1e-15)


def test_general_identity_reduction(f):
    a = general_absorbed(OperatorSpec(0.0, 0.0, 0.0), 0.5, parse_potential("const:0.3"), 0.4, f)
    b = evolve_absorbed(P, parse_potential("const:0.3"), 0.4, 16, f)
    assert np.max(np.abs(a.values - b.values)) < 1e-10


def test_general_contraction(grid):
    spec = OperatorSpec(1.0, 1.0, -1.0)
    g = sample(lambda x: gaussian(x, 2.0, 0.5), grid, 0.0)
    u = general_absorbed(spec, 0.0, parse_potential("linear:1"), 0.3, g)
    assert np.min(u.values) >= -1e-12 * np.max(u.values)
    assert weighted_norm(u).value <= (1 + 1e-8) * weighted_norm(g).value


def test_general_requires_c2(f):
    with pytest.raises(ValueError, match="c2"):
        general_absorbed(OperatorSpec(0.0, 0.0, 0.0), 1.0, parse_potential("zero"), 0.1,
                         f.with_values(f.values, 1.0))


@settings(max_examples=5)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 3.0))
def test_positivity_and_contraction(seed, c):
    from halfline.spaces import make_grid
    g = sample(random_nonnegative(np.random.default_rng(seed)), make_grid(), 0.8)
    u = evolve_absorbed(P, parse_potential(f"power:{c},1.5"), 0.3, 4, g)
    assert np.min(u.values) >= -1e-12 * np.max(u.values)
    assert weighted_norm(u).value <= (1 + 1e-8) * weighted_norm(g).value
