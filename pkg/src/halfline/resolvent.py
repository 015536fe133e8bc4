"""Green function and resolvent of the Bessel operator, boundary traces.

For real lambda > 0,

    (R(lambda) f)(x) = int G(lambda, x, r) f(r) r^kappa dr,
    G(lambda, x, r) = (x r)^nu I_nu(sqrt(lambda) min(x, r)) K_nu(sqrt(lambda) max(x, r)).

G has a kink on the diagonal, so the quadrature splits at r = x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .bessel import log_bessel_i, log_bessel_k
from .kernel import KernelParams
from .quadrature import (active_panels, clip_like, refine, split_correction,
                         windowed_apply)
from .report import CheckResult
from .spaces import Grid, GridFunction, weighted_norm

RESOLUTION = 0.5
DEFAULT_TOL = 1e-12
QUAD_TOL = 1e-8


def _check_lambda(lam: float) -> None:
    if not lam > 0:
        raise ValueError("this implementation supports real lambda > 0 only")


def log_green(p: KernelParams, lam: float, x, r):
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    s = math.sqrt(lam)
    lo, hi = np.minimum(x, r), np.maximum(x, r)
    return p.nu * np.log(x * r) + log_bessel_i(p.nu, s * lo) + log_bessel_k(p.nu, s * hi)


def green(p: KernelParams, lam: float, x, r):
    """G_kappa(lambda, x, r) >= 0, symmetric in (x, r)."""
    _check_lambda(lam)
    x, r = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(r, dtype=float))
    if np.any(x <= 0) or np.any(r <= 0):
        raise ValueError("x and r must be positive")
    return np.exp(log_green(p, lam, x, r))


@dataclass(frozen=True)
class ResolventQuery:
    params: KernelParams
    lam: float
    f: GridFunction

    def __post_init__(self):
        _check_lambda(self.lam)


def resolvent_values(p: KernelParams, lam: float, f: GridFunction, xs,
                     tol: float = DEFAULT_TOL) -> np.ndarray:
    """(R(lambda) f)(x) at arbitrary positive points."""
    _check_lambda(lam)
    xs = np.asarray(xs, dtype=float)
    act = active_panels(f)
    if not act.any():
        return np.zeros(xs.shape, dtype=np.result_type(f.values, float))
    s = math.sqrt(lam)
    ref = refine(f.grid, RESOLUTION / s, act)
    kap = p.kappa

    def kern(x, r):
        return np.exp(log_green(p, lam, x, r) + kap * np.log(r))

    wf = ref.w * (ref.interp @ f.values)
    width = (math.log(1.0 / tol) + 10.0) / s
    flat = xs.ravel()
    out = windowed_apply(kern, ref.r, wf, flat, width)
    out = out + split_correction(kern, ref, f, flat)
    return clip_like(out, f.values).reshape(xs.shape)


def apply_resolvent(q: ResolventQuery, out_grid: Optional[Grid] = None,
                    tol: float = DEFAULT_TOL) -> GridFunction:
    out_grid = q.f.grid if out_grid is None else out_grid
    vals = resolvent_values(q.params, q.lam, q.f, out_grid.nodes, tol)
    return GridFunction(out_grid, vals, q.f.weight_m)


# -- boundary behaviour ------------------------------------------------------


@dataclass(frozen=True)
class TraceResult:
    """Extrapolated limit of x^(m-1) f(x) at 0.

    ``exponent`` is the fitted power ``gamma`` in ``L + c x^gamma``;
    ``converged`` is False when gamma <= 0 (no finite limit).
    """

    value: float
    uncertainty: float
    exponent: float
    converged: bool


def _fit_power(x: np.ndarray, h: np.ndarray):
    """Fit h = L + c x^g through three points; returns (L, g)."""
    d1, d2 = h[1] - h[0], h[2] - h[1]
    if d1 == 0 and d2 == 0:
        return h[0], math.inf
    if d1 == 0 or d2 == 0 or np.sign(d1) != np.sign(d2):
        return math.nan, math.nan
    target = d1 / d2
    u = np.log(x / x[0])

    def resid(g):
        if abs(g) < 1e-12:
            return (u[1] - u[0]) / (u[2] - u[1]) - target
        e = np.expm1(g * u)
        return (e[1] - e[0]) / (e[2] - e[1]) - target

    lo, hi = -20.0, 20.0
    if resid(lo) * resid(hi) > 0:
        return math.nan, math.nan
    g = brentq(resid, lo, hi, xtol=1e-14, rtol=1e-14)
    e = np.expm1(g * u)
    c = d1 / (e[1] - e[0])  # h = h0 + c (exp(g u) - 1), c = coefficient times x0^g
    return h[0] - c, g


def boundary_trace(p: KernelParams, m: float, f: GridFunction, max_x_min: float = 1e-5) -> TraceResult:
    """Richardson-type extrapolation of x^(m-1) f(x) from the three smallest nodes."""
    x = f.grid.nodes[:3]
    if x[0] > max_x_min:
        raise ValueError(f"grid starts at {x[0]:.3g}; need x_min <= {max_x_min:g}")
    h = np.real(x ** (m - 1) * f.values[:3]).astype(float)
    L, g = _fit_power(x, h)
    if not math.isfinite(g):
        if g == math.inf:
            return TraceResult(float(L), 0.0, math.inf, True)
        return TraceResult(math.nan, math.inf, math.nan, False)
    if g <= 0:
        return TraceResult(math.copysign(math.inf, h[0]), math.inf, g, False)
    return TraceResult(float(L), float(abs(h[0] - L)), float(g), True)


# -- dissipativity -----------------------------------------------------------


def dissipativity_check(p: KernelParams, m: float, lam: float, g: GridFunction,
                        tol: float = QUAD_TOL, name: str = "dissipativity") -> CheckResult:
    """Check ||g||_m >= lam ||f||_m + (1-m)(m-kappa) ||f||_{m-2} for f = R(lam) g.

    Measured value is the margin divided by ||g||_m (zero for g = 0); for
    g >= 0 the inequality is an identity, so the margin sits at rounding
    level.  The X_{m-2} norm includes the extrapolated mass below x_min.
    """
    if not (p.kappa < m <= 1):
        raise ValueError(f"m must lie in (kappa, 1] = ({p.kappa}, 1]")
    f = apply_resolvent(ResolventQuery(p, lam, g))
    ng = weighted_norm(g, m)
    nf = weighted_norm(f, m)
    nf2 = weighted_norm(f, m - 2)
    lhs = ng.value
    rhs = lam * nf.total + (1 - m) * (m - p.kappa) * nf2.total
    scale = lhs if lhs > 0 else 1.0
    margin = (lhs - rhs) / scale
    return CheckResult(name, margin, 0.0, tol, "lower",
                       {"lhs": lhs, "rhs": rhs, "kappa": p.kappa, "m": m, "lambda": lam})
