"""Test functions used by the verification suites.

Operator norms on X_m cannot be computed, so norm estimates are lower
bounds taken over a fixed family: Gaussian bumps at five centres and two
widths.  Checks that need compact support use the smooth bump
``exp(-1/(1-u^2))`` with closed-form derivatives.
"""

from __future__ import annotations

import numpy as np

CENTERS = (0.5, 1.0, 2.0, 4.0, 8.0)
WIDTHS = (0.15, 0.5)


def gaussian(x, center: float, width: float):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * ((x - center) / width) ** 2)


def gaussian_family():
    """The ten (center, width) pairs, in a fixed order."""
    return [(c, w) for c in CENTERS for w in WIDTHS]


def bump(x, center: float, radius: float, derivatives: int = 0):
    """Smooth bump supported on [center - radius, center + radius].

    Returns the value, or a tuple (f, f', f'') when ``derivatives == 2``.
    """
    x = np.asarray(x, dtype=float)
    u = (x - center) / radius
    inside = np.abs(u) < 1
    f = np.zeros_like(u)
    d1 = np.zeros_like(u)
    d2 = np.zeros_like(u)
    ui = u[inside]
    q = 1 - ui * ui
    fi = np.exp(-1 / q)
    # phi = -1/q, phi' = -2u/q^2, phi'' = -(2 + 6u^2)/q^3
    p1 = -2 * ui / q**2
    p2 = -(2 + 6 * ui * ui) / q**3
    f[inside] = fi
    d1[inside] = fi * p1 / radius
    d2[inside] = fi * (p1 * p1 + p2) / radius**2
    if derivatives == 0:
        return f
    if derivatives == 2:
        return f, d1, d2
    raise ValueError("derivatives must be 0 or 2")


def random_nonnegative(rng: np.random.Generator, n_terms: int = 3):
    """Random non-negative combination of bumps; returns a callable."""
    centers = rng.uniform(1.0, 5.0, n_terms)
    radii = rng.uniform(0.3, 0.8, n_terms)
    amps = rng.uniform(0.2, 1.0, n_terms)

    def fn(x):
        return sum(a * bump(x, c, r) for a, c, r in zip(amps, centers, radii))

    fn.params = list(zip(amps.tolist(), centers.tolist(), radii.tolist()))
    return fn
