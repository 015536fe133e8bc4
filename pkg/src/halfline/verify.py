"""Machine checks of the quantitative claims: oracles, inequalities, slopes.

Operator norms between weighted spaces are estimated from below over the
Gaussian family of :mod:`halfline.families`, rescaled to the diffusion
length: f_j^t(r) = phi_j(r/sqrt(t)).  Every kernel checked here is
self-similar, k(t, x, r) = t^{-1/2} k(1, x/sqrt(t), r/sqrt(t)), so the
norm ratio over this family scales exactly like the claimed power of t and
the fitted slope measures how faithfully the discretisation keeps that
covariance over several decades of t.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from . import __version__
from .absorption import (Potential, evolve_absorbed, parse_potential, splitting_defect,
                         truncated_convergence)
from .bessel import BesselOrder, bessel_i, bessel_k, ode_residual, wronskian
from .families import bump, gaussian, gaussian_family, random_nonnegative
from .kernel import (KernelParams, SectorPoint, apply_semigroup, fit_gaussian_constants,
                     gaussian_envelope, heat_kernel, kernel_z_derivative, semigroup_values)
from .quadrature import active_panels, locality_width, refine, windowed_apply
from .reduce import (OperatorSpec, classify, conjugated_semigroup, discriminant,
                     operator_action, reduction_plan, thresholds, transform)
from .report import CheckResult, VerificationReport
from .resolvent import (ResolventQuery, apply_resolvent, boundary_trace, dissipativity_check,
                        green, resolvent_values)
from .spaces import Grid, GridFunction, make_grid, sample, weighted_norm

QUAD_TOL = 1e-8
SLOPE_TIMES = tuple(np.geomspace(1e-3, 1.0, 7))
# a constant fitted on one lattice may be exceeded slightly between its points
HELD_OUT_MARGIN = 0.1


# -- q kernels ----------------------------------------------------------------


def q_kernel(s: float, alpha: float, beta: float, t: float, x, r):
    """t^{-1/2} (x/sqrt t ^ 1)^{-alpha} (r/sqrt t ^ 1)^{-beta} exp(-|x-r|^2/(s t))."""
    sq = math.sqrt(t)
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    return (np.minimum(x / sq, 1.0) ** (-alpha) * np.minimum(r / sq, 1.0) ** (-beta)
            * np.exp(-((x - r) ** 2) / (s * t)) / sq)


def q_values(s, alpha, beta, t, f: GridFunction, xs, tol: float = 1e-12):
    act = active_panels(f)
    xs = np.asarray(xs, dtype=float)
    if not act.any():
        return np.zeros(xs.shape)
    ref = refine(f.grid, 0.5 * math.sqrt(s * t / 4), act, breaks=(math.sqrt(t),))
    wf = ref.w * (ref.interp @ f.values)
    out = windowed_apply(lambda x, r: q_kernel(s, alpha, beta, t, x, r), ref.r, wf,
                         xs.ravel(), locality_width(s * t, tol))
    return out.reshape(xs.shape)


def q_apply(s: float, alpha: float, beta: float, t: float, f: GridFunction,
            out_grid: Optional[Grid] = None) -> GridFunction:
    """(Q_{s,alpha,beta}(t) f) on ``out_grid`` (default: the grid of ``f``)."""
    if not t > 0:
        raise ValueError("t must be positive")
    out_grid = f.grid if out_grid is None else out_grid
    return GridFunction(out_grid, q_values(s, alpha, beta, t, f, out_grid.nodes), f.weight_m)


# -- helpers -----------------------------------------------------------------


def tail_integral(grid: Grid, values: np.ndarray, xs) -> np.ndarray:
    """int_x^{x_max} of the panel interpolant of ``values``, for each x."""
    xs = np.asarray(xs, dtype=float)
    p, q = grid.panels, grid.order
    pw = (grid.weights * values).reshape(p, q).sum(axis=1)
    suffix = np.append(np.cumsum(pw[::-1])[::-1], 0.0)
    k = np.clip(np.searchsorted(grid.edges, xs, side="right") - 1, 0, p - 1)
    t, wt = np.polynomial.legendre.leggauss(q)
    b = grid.edges[k + 1][:, None]
    a = xs[:, None]
    nodes = 0.5 * (b - a) * t + 0.5 * (a + b)
    vals = (grid.interp_matrix(nodes.ravel()) @ values).reshape(nodes.shape)
    partial = np.sum(0.5 * (b - a) * wt * vals, axis=1)
    return partial + suffix[k + 1]


def fit_slope(ts, values) -> float:
    return float(np.polyfit(np.log(ts), np.log(values), 1)[0])


def loo_spread(ts, values) -> float:
    """Largest relative change of the fitted slope when one point is dropped."""
    full = fit_slope(ts, values)
    ts, values = np.asarray(ts), np.asarray(values)
    changes = [abs(fit_slope(np.delete(ts, i), np.delete(values, i)) - full)
               for i in range(ts.size)]
    return max(changes) / max(abs(full), 1e-2)


def _family_ratios(apply_op: Callable, m: float, thetas, ts, grid: Grid):
    """max over the rescaled family of ||op(t) f||_{m-theta} / ||f||_m, per theta."""
    ratios = {th: [] for th in thetas}
    for t in ts:
        best = {th: 0.0 for th in thetas}
        sq = math.sqrt(abs(t))
        for c, w in gaussian_family():
            f = sample(lambda x: gaussian(x / sq, c, w), grid, m)
            u = apply_op(t, f)
            nf = weighted_norm(f).total
            for th in thetas:
                best[th] = max(best[th], weighted_norm(u, m - th).total / nf)
        for th in thetas:
            ratios[th].append(best[th])
    return ratios


def _slope_entries(prefix: str, ts, ratios: dict, rel: float = 0.05, zero_tol: float = 0.03):
    entries = []
    for th, vals in ratios.items():
        slope = fit_slope(ts, vals)
        target = -th / 2
        tol = zero_tol if th == 0 else rel * abs(target)
        const = float(np.exp(np.mean(np.log(vals) - target * np.log(ts))))
        entries.append(CheckResult(f"{prefix}_theta{th:g}", slope, target, tol, "abs",
                                   {"fitted_constant": const, "ratios": list(vals)}))
        entries.append(CheckResult(f"{prefix}_theta{th:g}_loo", loo_spread(ts, vals), 0.0,
                                   0.01, "upper"))
    return entries


# -- suites --------------------------------------------------------------------


def smoothing_suite(p: KernelParams, m: float, thetas: Sequence[float], ts=SLOPE_TIMES,
                    phase: float = 0.0, grid: Optional[Grid] = None,
                    prefix: str = "smoothing") -> VerificationReport:
    """Fitted log-log slope of ||S(z)||_{X_m -> X_{m-theta}} against |z|."""
    thetas = list(thetas)
    if not thetas:
        raise ValueError("empty theta list")
    for th in thetas:
        if not (th + p.kappa - 2 < m <= 1):
            raise ValueError(f"need theta + kappa - 2 < m <= 1, got theta={th}, m={m}")
    grid = grid or make_grid()
    ratios = _family_ratios(lambda t, f: apply_semigroup(p, SectorPoint(t, phase), f),
                            m, thetas, ts, grid)
    rep = VerificationReport(metadata={"kappa": p.kappa, "m": m, "phase": phase})
    for e in _slope_entries(prefix, ts, ratios):
        rep.add(e)
    return rep


def q_slope_check(s: float, alpha: float, beta: float, m: float, theta: float, ts=SLOPE_TIMES,
                  grid: Optional[Grid] = None, prefix: str = "q_slope") -> list:
    grid = grid or make_grid()
    ratios = _family_ratios(lambda t, f: q_apply(s, alpha, beta, t, f), m, [theta], ts, grid)
    entries = _slope_entries(prefix, ts, ratios)
    for e in entries:
        e.detail.update({"s": s, "alpha": alpha, "beta": beta, "m": m})
    return entries


def default_g(grid: Grid, m: float) -> GridFunction:
    return sample(lambda x: bump(x, 2.0, 1.0), grid, m)


def appendix_b_suite(p: KernelParams, m: float, g: Optional[GridFunction] = None,
                     grid: Optional[Grid] = None, prefix: str = "appendix_b") -> VerificationReport:
    """Derivative, tail and reconstruction identities for f = R(1) g.

    With lambda = 1, G_kappa f = f - g is known on the grid.  Checks:
    (i) f' from the tail integral of z^kappa G f against central differences;
    (ii) x^{m-1} f and x^m f' decrease to 0 at infinity, x^m f' -> 0 at 0;
    (iii) f rebuilt from its image under G_kappa;
    (iv) x^{m-1} f equals minus the tail integral of its derivative, and its
    limit at 0 exists.
    Relative defects are normalised by the maximum of the reference on the
    sampled interval.
    """
    if not m > p.kappa:
        raise ValueError("need m > kappa")
    grid = grid or make_grid()
    g = default_g(grid, m) if g is None else g
    kap = p.kappa
    x = grid.nodes
    f = apply_resolvent(ResolventQuery(p, 1.0, g)).values
    gf = f - g.values

    def fprime(xs):
        xs = np.asarray(xs, dtype=float)
        return -xs ** (-kap) * tail_integral(grid, x**kap * gf, xs)

    def fvals(xs):
        return resolvent_values(p, 1.0, g, xs)

    rep = VerificationReport(metadata={"kappa": kap, "m": m})
    # (i)
    xs = np.geomspace(0.1, 5.0, 40)
    h = 1e-3 * xs
    fd = (fvals(xs + h) - fvals(xs - h)) / (2 * h)
    d1 = np.max(np.abs(fprime(xs) - fd)) / np.max(np.abs(fd))
    rep.add(CheckResult(f"{prefix}_i_derivative", d1, 0.0, 1e-4, "upper"))
    # (ii)
    far = np.array([20.0, 30.0, 40.0])
    near = np.array([1e-3, 1e-4, 1e-5])
    h_far = np.abs(far ** (m - 1) * fvals(far))
    peak = np.max(np.abs(x ** (m - 1) * f))
    dp_far = np.abs(far**m * fprime(far))
    dp_peak = np.max(np.abs(x**m * fprime(x)))
    dp_near = np.abs(near**m * fprime(near))
    for tag, seq, ref in (("f_infinity", h_far, peak), ("fprime_infinity", dp_far, dp_peak),
                          ("fprime_zero", dp_near, dp_peak)):
        ratio = float(np.max(seq[1:] / seq[:-1]))
        rep.add(CheckResult(f"{prefix}_ii_{tag}_decreasing", ratio, 1.0, 0.0, "upper",
                            {"values": list(seq)}))
        rep.add(CheckResult(f"{prefix}_ii_{tag}_small", float(seq[-1] / ref), 0.0, 1e-3, "upper"))
    # (iii) f lies in X_1 as well (exponential decay, x^{1-kappa} at 0)
    xr = np.geomspace(0.2, 2.0, 20)
    recon = (tail_integral(grid, x * gf, xr) - xr ** (1 - kap) * tail_integral(grid, x**kap * gf, xr)) / (1 - kap)
    fr = fvals(xr)
    d3 = np.max(np.abs(recon - fr)) / np.max(np.abs(fr))
    rep.add(CheckResult(f"{prefix}_iii_reconstruction", d3, 0.0, 1e-4, "upper"))
    # (iv)
    deriv = x ** (m - 1) * fprime(x) + (m - 1) * x ** (m - 2) * f
    lhs = xs ** (m - 1) * fvals(xs)
    rhs = -tail_integral(grid, deriv, xs)
    d4 = np.max(np.abs(lhs - rhs)) / np.max(np.abs(lhs))
    rep.add(CheckResult(f"{prefix}_iv_tail_identity", d4, 0.0, 1e-4, "upper"))
    tr = boundary_trace(p, m, GridFunction(grid, f, m))
    rep.add(CheckResult(f"{prefix}_iv_limit_exists", float(tr.converged), 1.0, 0.0, "abs",
                        {"limit": tr.value, "uncertainty": tr.uncertainty}))
    return rep


def laplace_kernel_defect(p: KernelParams, lam: float, points: int = 6,
                          lo: float = 0.2, hi: float = 3.0) -> float:
    """max relative gap between int e^{-lam t} k dt (adaptive quadrature) and G r^kappa."""
    pts = np.linspace(lo, hi, points)
    worst = 0.0
    for xv in pts:
        for rv in pts:
            def integrand(u):
                return 2 * u * math.exp(-lam * u * u) * float(heat_kernel(p, u * u, xv, rv))
            val = quad(integrand, 0, np.inf, epsabs=0, epsrel=1e-11, limit=400)[0]
            ref = float(green(p, lam, xv, rv)) * rv**p.kappa
            worst = max(worst, abs(val / ref - 1))
    return worst


def laplace_function_defect(p: KernelParams, lam: float, g: GridFunction, xs,
                            horizon: float = 40.0, panels: int = 24, order: int = 10) -> float:
    """Relative gap between int_0^T e^{-lam t} S(t) g dt and R(lam) g at ``xs``, T = horizon/lam."""
    xs = np.asarray(xs, dtype=float)
    T = horizon / lam
    edges = np.concatenate([[0.0], np.geomspace(1e-5, T, panels)])
    tt, wt = np.polynomial.legendre.leggauss(order)
    acc = np.zeros(xs.size)
    for a, b in zip(edges[:-1], edges[1:]):
        for tn, wn in zip(0.5 * (b - a) * tt + 0.5 * (a + b), 0.5 * (b - a) * wt):
            acc += wn * math.exp(-lam * tn) * semigroup_values(p, tn, g, xs)
    ref = resolvent_values(p, lam, g, xs)
    return float(np.max(np.abs(acc - ref)) / np.max(np.abs(ref)))


def peaked_quartic(x):
    """x^4 exp(-(x-3)^2/2) with its first two derivatives.

    Vanishes to fourth order at 0, so every term of A_alpha(a,b) f stays
    integrable there, and is negligible beyond x = 40.
    """
    x = np.asarray(x, dtype=float)
    e = np.exp(-((x - 3) ** 2) / 2)
    d = x - 3
    f = x**4 * e
    f1 = (4 * x**3 - x**4 * d) * e
    f2 = (12 * x**2 - 8 * x**3 * d - x**4 + x**4 * d * d) * e
    return f, f1, f2


def generator_residual(spec: OperatorSpec, n: float, hs=(0.004, 0.002, 0.001, 0.0005),
                       grid: Optional[Grid] = None, fn: Callable = peaked_quartic):
    """||(e^{hA} f - f)/h - A f||_{X_n} for each h, and the fitted order in h."""
    grid = grid or make_grid()
    x = grid.nodes
    f0, f1, f2 = fn(x)
    f = GridFunction(grid, f0, n)
    af = operator_action(spec, x, f0, f1, f2)
    errs = []
    for h in hs:
        u = conjugated_semigroup(spec, n, h, f)
        errs.append(weighted_norm(f.with_values((u.values - f0) / h - af)).value)
    return fit_slope(hs, errs), errs


# -- check registry ----------------------------------------------------------


@dataclass(frozen=True)
class CheckSpec:
    name: str
    parameters: dict = field(default_factory=dict)
    tolerance: float = QUAD_TOL
    mode: str = "exact"

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.mode not in ("exact", "slope_fit", "ordering"):
            raise ValueError(f"unknown mode {self.mode!r}")


_REGISTRY: dict = {}


def register(kind: str):
    def deco(fn):
        _REGISTRY[kind] = fn
        return fn
    return deco


def _grid(params) -> Grid:
    return make_grid(*params.get("grid", ()))


@register("bessel_golden")
def _c_bessel_golden(spec, rng):
    i = bessel_i(BesselOrder(0.5), 1.0).value()
    k = bessel_k(BesselOrder(0.5), 1.0).value()
    ei = math.sqrt(2 / math.pi) * math.sinh(1.0)
    ek = math.sqrt(math.pi / 2) * math.exp(-1.0)
    return [CheckResult(f"{spec.name}_i_half", float(i), ei, 1e-12, "rel"),
            CheckResult(f"{spec.name}_k_half", float(k), ek, 1e-12, "rel")]


@register("bessel_wronskian")
def _c_wronskian(spec, rng):
    x = np.geomspace(1e-6, 600, 100)
    worst = max(float(np.max(np.abs(x * wronskian(BesselOrder(nu), x) + 1)))
                for nu in (0.1, 0.25, 0.5, 1.3))
    return [CheckResult(spec.name, worst, 0.0, 1e-10, "upper")]


@register("bessel_ode")
def _c_bessel_ode(spec, rng):
    x = np.geomspace(1e-3, 600, 60)
    worst = max(float(np.max(np.abs(ode_residual(BesselOrder(nu), x, kind))))
                for nu in (0.1, 0.5, 1.3) for kind in ("i", "k"))
    return [CheckResult(spec.name, worst, 0.0, 1e-9, "upper")]


@register("kernel_dirichlet")
def _c_kernel_dirichlet(spec, rng):
    p = KernelParams(0.0)
    pts = np.linspace(0.05, 5.0, 30)
    X, R = np.meshgrid(pts, pts, indexing="ij")
    worst = 0.0
    for t in (0.01, 0.1, 1.0):
        ex = (np.exp(-(X - R) ** 2 / (4 * t)) - np.exp(-(X + R) ** 2 / (4 * t))) / math.sqrt(4 * math.pi * t)
        ok = ex > 1e-290
        worst = max(worst, float(np.max(np.abs(heat_kernel(p, t, X, R)[ok] / ex[ok] - 1))))
    return [CheckResult(spec.name, worst, 0.0, 1e-10, "upper")]


def _lattice():
    x = np.geomspace(0.05, 5.0, 30)
    return np.meshgrid(x, x, indexing="ij")


@register("kernel_symmetry")
def _c_kernel_symmetry(spec, rng):
    X, R = _lattice()
    worst = 0.0
    for kap in (-1.0, 0.0, 0.5, 0.9):
        p = KernelParams(kap)
        for phase in (0.0, math.pi / 4, -math.pi / 4):
            for t in np.geomspace(0.01, 10, 10):
                z = SectorPoint(t, phase)
                a = X**kap * heat_kernel(p, z, X, R)
                b = R**kap * heat_kernel(p, z, R, X)
                ok = np.abs(a) > 1e-280
                worst = max(worst, float(np.max(np.abs(a[ok] - b[ok]) / np.abs(a[ok]))))
    return [CheckResult(spec.name, worst, 0.0, 1e-12, "upper")]


@register("kernel_positivity")
def _c_kernel_positivity(spec, rng):
    X, R = _lattice()
    low = min(float(np.min(heat_kernel(KernelParams(k), t, X, R)))
              for k in (-1.0, 0.0, 0.5, 0.9) for t in np.geomspace(0.01, 10, 10))
    return [CheckResult(spec.name, low, 0.0, 0.0, "lower")]


@register("kernel_gaussian_bound")
def _c_kernel_gaussian_bound(spec, rng):
    kap = spec.parameters.get("kappa", 0.0)
    phase = spec.parameters.get("phase", 0.0)
    p = KernelParams(kap)
    C, s = fit_gaussian_constants(p, phase)
    # held-out lattice: shifted by half a lattice step in every direction
    xs = np.geomspace(1e-3, 20.0, 50)
    xs = np.sqrt(xs[1:] * xs[:-1])
    ts = np.geomspace(1e-2, 10.0, 20)
    ts = np.sqrt(ts[1:] * ts[:-1])
    X, R = np.meshgrid(xs, xs, indexing="ij")
    worst = 0.0
    for t in ts:
        z = SectorPoint(t, phase)
        env = gaussian_envelope(p, z, X, R, C, s)
        ok = env > 1e-290
        worst = max(worst, float(np.max(np.abs(heat_kernel(p, z, X, R))[ok] / env[ok])))
    return [CheckResult(spec.name, worst, 1.0, HELD_OUT_MARGIN, "upper",
                        {"C": C, "s": s, "kappa": kap, "phase": phase})]


@register("kernel_z_derivative")
def _c_kernel_z_derivative(spec, rng):
    worst = 0.0
    for kap in (0.0, -1.0, 0.5):
        p = KernelParams(kap)
        for zc in (1.0, 0.3 * np.exp(0.5j), 2.0):
            for xv, rv in ((1.0, 1.0), (0.4, 1.5), (2.0, 0.7)):
                h = 1e-5 * abs(zc)
                fd = (heat_kernel(p, zc + h, xv, rv) - heat_kernel(p, zc - h, xv, rv)) / (2 * h)
                an = kernel_z_derivative(p, zc, xv, rv)
                worst = max(worst, float(abs(an - fd) / abs(an)))
    return [CheckResult(spec.name, worst, 0.0, 1e-6, "upper")]


@register("kernel_derivative_bound")
def _c_kernel_derivative_bound(spec, rng):
    """|z dk/dz| against C [q_{2s,kappa-1,-1} + q_{2s,kappa-2,-2}](|z|, x, r), C fitted."""
    kap = spec.parameters.get("kappa", 0.0)
    phase = spec.parameters.get("phase", math.pi / 4)
    p = KernelParams(kap)
    s = fit_gaussian_constants(p, phase, n_space=4, n_time=2)[1]

    def ratio(xs, ts):
        X, R = np.meshgrid(xs, xs, indexing="ij")
        worst = 0.0
        for t in ts:
            z = SectorPoint(t, phase)
            lhs = np.abs(z.z * kernel_z_derivative(p, z, X, R))
            rhs = (q_kernel(2 * s, kap - 1, -1, t, X, R) + q_kernel(2 * s, kap - 2, -2, t, X, R))
            ok = rhs > 1e-290
            worst = max(worst, float(np.max(lhs[ok] / rhs[ok])))
        return worst

    xs = np.geomspace(1e-3, 20.0, 40)
    ts = np.geomspace(1e-2, 10.0, 10)
    C = ratio(xs, ts)
    held = ratio(np.sqrt(xs[1:] * xs[:-1]), np.sqrt(ts[1:] * ts[:-1]))
    return [CheckResult(spec.name, held / C, 1.0, HELD_OUT_MARGIN, "upper", {"C": C, "s": 2 * s})]


def _bump_m(grid, m, c=2.0, w=0.5):
    return sample(lambda x: gaussian(x, c, w), grid, m)


@register("semigroup_law")
def _c_semigroup_law(spec, rng):
    grid = _grid(spec.parameters)
    worst = 0.0
    for kap in spec.parameters.get("kappas", (-1.0, 0.0, 0.5)):
        p = KernelParams(kap)
        for m in (0.0, 1.0):
            f = _bump_m(grid, m)
            a = apply_semigroup(p, 0.3, f)
            b = apply_semigroup(p, 0.1, apply_semigroup(p, 0.2, f))
            d = weighted_norm(a.with_values(a.values - b.values)).value / weighted_norm(f).value
            worst = max(worst, d)
    return [CheckResult(spec.name, worst, 0.0, 1e-6, "upper")]


def _contraction(p, m, funcs, ts, grid):
    worst_growth, worst_rise = -math.inf, -math.inf
    for fn in funcs:
        f = sample(fn, grid, m)
        nf = weighted_norm(f).value
        norms = [weighted_norm(apply_semigroup(p, t, f)).value for t in ts]
        worst_growth = max(worst_growth, max(norms) / nf - 1)
        seq = [nf] + norms
        worst_rise = max(worst_rise, max((b - a) / nf for a, b in zip(seq, seq[1:])))
    return worst_growth, worst_rise


@register("semigroup_contraction")
def _c_semigroup_contraction(spec, rng):
    grid = _grid(spec.parameters)
    n = spec.parameters.get("functions", 10)
    ts = spec.parameters.get("times", (0.1, 1.0, 10.0))
    out = []
    for kap, m in spec.parameters.get("cases", ((0.0, 0.5), (0.0, 1.0), (-1.0, 0.0))):
        funcs = [random_nonnegative(rng) for _ in range(n)]
        g, r = _contraction(KernelParams(kap), m, funcs, ts, grid)
        tag = f"{spec.name}_k{kap:g}_m{m:g}"
        out.append(CheckResult(tag, g, 0.0, 1e-8, "upper"))
        out.append(CheckResult(tag + "_monotone", r, 0.0, 1e-8, "upper"))
    return out


@register("semigroup_mass")
def _c_semigroup_mass(spec, rng):
    """For m = 1 and f >= 0 the X_1 mass is conserved (contraction is an equality)."""
    grid = _grid(spec.parameters)
    p = KernelParams(spec.parameters.get("kappa", 0.0))
    f = sample(random_nonnegative(rng), grid, 1.0)
    nf = weighted_norm(f).value
    d = abs(weighted_norm(apply_semigroup(p, 0.5, f)).value / nf - 1)
    return [CheckResult(spec.name, d, 0.0, 1e-8, "upper")]


@register("smoothing")
def _c_smoothing(spec, rng):
    prm = spec.parameters
    rep = smoothing_suite(KernelParams(prm.get("kappa", 0.0)), prm.get("m", 1.0),
                          prm.get("thetas", (0.5, 1.0)), prm.get("times", SLOPE_TIMES),
                          prm.get("phase", 0.0), _grid(prm), prefix=spec.name)
    return rep.entries


@register("analytic_ray")
def _c_analytic_ray(spec, rng):
    """sup over a complex ray of ||S(z) f||/||f|| stays bounded for a fixed f."""
    grid = _grid(spec.parameters)
    p = KernelParams(spec.parameters.get("kappa", 0.0))
    m = spec.parameters.get("m", 1.0)
    f = _bump_m(grid, m)
    nf = weighted_norm(f).value
    ts = np.geomspace(1e-3, 1.0, 7)
    vals = [weighted_norm(apply_semigroup(p, SectorPoint(t, math.pi / 4), f)).value / nf for t in ts]
    return [CheckResult(spec.name, max(vals), 0.0, 10.0, "upper", {"ratios": vals})]


@register("green_closed_form")
def _c_green(spec, rng):
    p = KernelParams(0.0)
    x = np.linspace(0.1, 4, 25)
    X, R = np.meshgrid(x, x, indexing="ij")
    ex = np.sinh(np.minimum(X, R)) * np.exp(-np.maximum(X, R))
    d = float(np.max(np.abs(green(p, 1.0, X, R) / ex - 1)))
    return [CheckResult(spec.name, d, 0.0, 1e-12, "upper")]


@register("green_symmetry")
def _c_green_symmetry(spec, rng):
    x = np.geomspace(1e-3, 20, 30)
    X, R = np.meshgrid(x, x, indexing="ij")
    worst = 0.0
    for kap in (-1.0, 0.0, 0.5):
        for lam in (0.5, 1.0, 4.0):
            a = green(KernelParams(kap), lam, X, R)
            b = green(KernelParams(kap), lam, R, X)
            worst = max(worst, float(np.max(np.abs(a - b) / a)))
    return [CheckResult(spec.name, worst, 0.0, 1e-13, "upper")]


@register("resolvent_identity")
def _c_resolvent_identity(spec, rng):
    grid = _grid(spec.parameters)
    p = KernelParams(spec.parameters.get("kappa", 0.0))
    g = sample(random_nonnegative(rng), grid, 1.0)
    r1 = apply_resolvent(ResolventQuery(p, 1.0, g))
    r2 = apply_resolvent(ResolventQuery(p, 2.0, g))
    r12 = apply_resolvent(ResolventQuery(p, 1.0, r2))
    d = r12.values * (1.0 - 2.0) - (r2.values - r1.values)
    rel = weighted_norm(g.with_values(d)).value / weighted_norm(r1).value
    return [CheckResult(spec.name, rel, 0.0, 10 * QUAD_TOL, "upper")]


@register("resolvent_positivity_contraction")
def _c_resolvent_pc(spec, rng):
    grid = _grid(spec.parameters)
    out_low, out_ratio = math.inf, -math.inf
    for kap, m, lam in ((0.0, 1.0, 1.0), (0.1, 0.6, 2.0), (-1.0, 0.0, 0.5)):
        p = KernelParams(kap)
        g = sample(random_nonnegative(rng), grid, m)
        f = apply_resolvent(ResolventQuery(p, lam, g))
        out_low = min(out_low, float(np.min(f.values)))
        out_ratio = max(out_ratio, lam * weighted_norm(f).value / weighted_norm(g).value)
    return [CheckResult(spec.name + "_positivity", out_low, 0.0, 0.0, "lower"),
            CheckResult(spec.name + "_contraction", out_ratio, 1.0, QUAD_TOL, "upper")]


@register("laplace_kernel")
def _c_laplace_kernel(spec, rng):
    prm = spec.parameters
    worst = max(laplace_kernel_defect(KernelParams(k), prm.get("lam", 1.0), prm.get("points", 6))
                for k in prm.get("kappas", (0.0, -1.0, 0.5)))
    return [CheckResult(spec.name, worst, 0.0, 1e-5, "upper")]


@register("laplace_function")
def _c_laplace_function(spec, rng):
    grid = _grid(spec.parameters)
    p = KernelParams(spec.parameters.get("kappa", 0.0))
    g = sample(lambda x: bump(x, 2.0, 1.0), grid, 1.0)
    d = laplace_function_defect(p, 1.0, g, np.array([0.5, 1.5, 2.0, 3.0, 4.0]))
    return [CheckResult(spec.name, d, 0.0, 1e-4, "upper")]


@register("boundary_trace")
def _c_boundary_trace(spec, rng):
    grid = _grid(spec.parameters)
    out = []
    for kap, m in ((0.0, 1.0), (0.2, 0.7), (-1.0, 0.5)):
        p = KernelParams(kap)
        g = sample(lambda x: bump(x, 2.0, 1.0), grid, m)
        f = apply_resolvent(ResolventQuery(p, 1.0, g))
        tr = boundary_trace(p, m, f)
        val = tr.value if tr.converged else math.inf
        out.append(CheckResult(f"{spec.name}_k{kap:g}_m{m:g}", val, 0.0, 1e-4, "abs",
                               {"uncertainty": tr.uncertainty, "exponent": tr.exponent}))
    return out


def domain_c1_membership(p: KernelParams, m: float, g: GridFunction, lam: float = 1.0,
                         samples: int = 5, name: str = "domain_c1") -> CheckResult:
    """Resolvent output lies in X_r for ``samples`` values of r in (kappa-2, m].

    Only finitely many r can be tested; membership is read off the head and
    tail estimates of the truncated norm, which are infinite when the local
    power law is not integrable.  Measured value is the largest ratio of
    estimated truncated mass to computed norm.
    """
    if not (p.kappa - 2 < m <= p.kappa):
        raise ValueError(f"case c1 needs kappa-2 < m <= kappa, got m={m}, kappa={p.kappa}")
    f = apply_resolvent(ResolventQuery(p, lam, g.with_values(g.values, m)))
    lo = p.kappa - 2
    rs = [lo + (m - lo) * k / samples for k in range(1, samples + 1)]
    ratios = []
    for r in rs:
        nr = weighted_norm(f, r)
        ratios.append(nr.truncation_estimate / nr.value if nr.value > 0 else 0.0)
    return CheckResult(name, max(ratios), 0.0, 0.5, "upper", {"r": rs, "ratios": ratios})


@register("domain_c1")
def _c_domain_c1(spec, rng):
    grid = _grid(spec.parameters)
    out = []
    for kap, m in spec.parameters.get("cases", ((0.5, 0.0), (0.0, -1.0))):
        g = sample(lambda x: bump(x, 2.0, 1.0), grid, m)
        out.append(domain_c1_membership(KernelParams(kap), m, g,
                                        name=f"{spec.name}_k{kap:g}_m{m:g}"))
    return out


@register("dissipativity")
def _c_dissipativity(spec, rng):
    grid = _grid(spec.parameters)
    n = spec.parameters.get("functions", 10)
    out = []
    for kap, m, lam in spec.parameters.get("cases", ((0.1, 0.6, 1.0), (0.0, 1.0, 2.0))):
        p = KernelParams(kap)
        margins = [dissipativity_check(p, m, lam, sample(random_nonnegative(rng), grid, m)).measured
                   for _ in range(n)]
        out.append(CheckResult(f"{spec.name}_k{kap:g}_m{m:g}_l{lam:g}", min(margins), 0.0,
                               QUAD_TOL, "lower", {"margins": margins}))
    return out


@register("reduction_remark")
def _c_reduction_remark(spec, rng):
    worst = 0.0
    for al in (0.0, 1.0, 1.5, -2.0):
        th = thresholds(OperatorSpec(al, 2 * al, al * (al - 1)))
        got = (th["n_*"], th["n_*^-"], th["n_*^+"])
        worst = max(worst, max(abs(u - v) for u, v in zip(got, (al - 2, 0.0, 1.0))))
    d_worst = max(abs(discriminant(OperatorSpec(al, 2 * al, al * (al - 1))) - 1)
                  for al in (0.0, 1.0, 1.5, -2.0))
    return [CheckResult(spec.name + "_thresholds", worst, 0.0, 0.0, "abs"),
            CheckResult(spec.name + "_discriminant", d_worst, 0.0, 0.0, "abs")]


@register("reduction_identity")
def _c_reduction_identity(spec, rng):
    grid = _grid(spec.parameters)
    f = _bump_m(grid, 0.5)
    a = conjugated_semigroup(OperatorSpec(0.0, 0.0, 0.0), 0.5, 0.3, f)
    b = apply_semigroup(KernelParams(0.0), 0.3, f)
    d = float(np.max(np.abs(a.values - b.values)))
    return [CheckResult(spec.name, d, 0.0, 1e-10, "upper")]


@register("isometry")
def _c_isometry(spec, rng):
    grid = _grid(spec.parameters)
    worst = 0.0
    for beta, l, n in ((0.5, 0.3, 0.0), (-0.5, -1.0, 0.7), (-3.0, 0.2, -0.4), (1.0, 2.0, 1.0)):
        f = sample(lambda x: gaussian(x, 1.5, 0.6) * x, grid, n)
        u = transform(f, beta, l)
        worst = max(worst, abs(weighted_norm(u).value / weighted_norm(f).value - 1))
    return [CheckResult(spec.name, worst, 0.0, 1e-10, "upper")]


@register("generator_residual")
def _c_generator_residual(spec, rng):
    out = []
    for al, a, b, n in spec.parameters.get("specs", ((0.0, 0.0, -0.75, 0.5), (1.0, 1.0, -1.0, 0.0))):
        order, errs = generator_residual(OperatorSpec(al, a, b), n, grid=_grid(spec.parameters))
        out.append(CheckResult(f"{spec.name}_a{al:g}_{a:g}_{b:g}_n{n:g}", order, 0.9, 0.0, "lower",
                               {"defects": errs}))
    return out


@register("classify_examples")
def _c_classify(spec, rng):
    s = OperatorSpec(0.0, 0.0, 0.0)
    got = [classify(s, 1.0), classify(s, 0.5), classify(s, -3.0)]
    ok = got == ["c3", "c2", "out_of_range"]
    bexp = reduction_plan(s, n=1.0).boundary_condition()["exponent"]
    return [CheckResult(spec.name, float(ok), 1.0, 0.0, "abs", {"labels": got}),
            CheckResult(spec.name + "_boundary_exponent", bexp, 0.0, 0.0, "abs")]


@register("threshold_consistency")
def _c_threshold_consistency(spec, rng):
    """Random admissible specs: m(n) lands in the matching range of kappa."""
    bad = 0
    count = spec.parameters.get("count", 100)
    for _ in range(count):
        al = rng.uniform(-3, 1.9) if rng.random() < 0.5 else rng.uniform(2.1, 5)
        a = rng.uniform(-3, 3)
        b = ((a - 1) ** 2 - rng.uniform(0.01, 4)) / 4
        s = OperatorSpec(al, a, b)
        plan = reduction_plan(s)
        th = thresholds(s)
        lo, hi = (th["n_*^-"], th["n_*^+"]) if s.singular else (th["n_-^*"], th["n_+^*"])
        top = hi if s.singular else lo
        n = rng.uniform(min(lo, hi), max(lo, hi))
        m = plan.weight_map(n)
        bad += not (plan.kappa < m < 1 and classify(s, n) == "c2")
        bad += not (abs(plan.weight_map(top) - 1) < 1e-12 and classify(s, top) == "c3")
        bad += not plan.kappa < 1
    return [CheckResult(spec.name, float(bad), 0.0, 0.0, "abs", {"count": count})]


@register("q_gaussian_bound")
def _c_q_gaussian(spec, rng):
    grid = _grid(spec.parameters)
    s = 2.0
    f = _bump_m(grid, 0.0)
    worst = max(weighted_norm(q_apply(s, 0.0, 0.0, t, f)).value / weighted_norm(f).value
                for t in (1e-3, 0.1, 1.0, 10.0))
    return [CheckResult(spec.name, worst, math.sqrt(math.pi * s), 1e-10, "upper")]


@register("q_slope")
def _c_q_slope(spec, rng):
    prm = spec.parameters
    return q_slope_check(prm["s"], prm["alpha"], prm["beta"], prm["m"], prm["theta"],
                         prm.get("times", SLOPE_TIMES), _grid(prm), prefix=spec.name)


@register("appendix_b")
def _c_appendix_b(spec, rng):
    prm = spec.parameters
    kap, m = prm.get("kappa", 0.0), prm.get("m", 1.0)
    return appendix_b_suite(KernelParams(kap), m, grid=_grid(prm),
                            prefix=f"{spec.name}_k{kap:g}_m{m:g}").entries


@register("absorption_constant")
def _c_absorption_constant(spec, rng):
    grid = _grid(spec.parameters)
    p = KernelParams(0.0)
    f = _bump_m(grid, 0.5, 3.0, 0.7)
    c = 0.7
    a = evolve_absorbed(p, parse_potential(f"const:{c}"), 0.5, 8, f)
    b = apply_semigroup(p, 0.5, f)
    d = float(np.max(np.abs(a.values - math.exp(-c * 0.5) * b.values)))
    return [CheckResult(spec.name, d, 0.0, 1e-10, "upper")]


@register("absorption_domination")
def _c_absorption_domination(spec, rng):
    grid = _grid(spec.parameters)
    p = KernelParams(0.0)
    f = _bump_m(grid, 0.5, 3.0, 0.7)
    om = parse_potential("linear:1")
    u = evolve_absorbed(p, om, 0.5, 16, f)
    u0 = apply_semigroup(p, 0.5, f)
    err = splitting_defect(p, om, 0.5, 16, f)
    low = float(np.min(u.values))
    over = float(np.max(u.values - u0.values))
    return [CheckResult(spec.name + "_nonnegative", low, 0.0, 2 * err, "lower"),
            CheckResult(spec.name + "_dominated", over, 0.0, 2 * err, "upper",
                        {"splitting_error": err})]


@register("strang_order")
def _c_strang_order(spec, rng):
    grid = _grid(spec.parameters)
    p = KernelParams(0.0)
    f = _bump_m(grid, 0.5, 3.0, 0.7)
    om = Potential(lambda x: x / (1 + x), label="x/(1+x)")
    steps = spec.parameters.get("steps", (4, 8, 16, 32))
    us = [evolve_absorbed(p, om, 0.5, n, f, merge_commuting=False).values for n in steps]
    defects = [weighted_norm(f.with_values(a - b)).value for a, b in zip(us, us[1:])]
    order = -fit_slope(steps[:-1], defects)
    return [CheckResult(spec.name, order, 2.0, 0.2, "abs", {"defects": defects})]


@register("truncated_potential")
def _c_truncated(spec, rng):
    grid = _grid(spec.parameters)
    p = KernelParams(0.0)
    f = _bump_m(grid, 0.5, 8.0, 3.0)
    res = truncated_convergence(p, parse_potential("linear:1"), 1.0, f, (1, 2, 4, 8, 16),
                                name=spec.name)
    return [res]


def default_suite() -> list:
    """The checks run by ``verify --suite default``."""
    return [
        CheckSpec("bessel_golden", tolerance=1e-12),
        CheckSpec("bessel_wronskian", tolerance=1e-10),
        CheckSpec("bessel_ode", tolerance=1e-9),
        CheckSpec("kernel_dirichlet", tolerance=1e-10),
        CheckSpec("kernel_symmetry", tolerance=1e-12),
        CheckSpec("kernel_positivity", mode="ordering"),
        CheckSpec("kernel_gaussian_bound", {"kappa": 0.0}, mode="ordering"),
        CheckSpec("kernel_z_derivative", tolerance=1e-6),
        CheckSpec("kernel_derivative_bound", {"kappa": 0.0}, mode="ordering"),
        CheckSpec("semigroup_law", {"kappas": (0.0,)}, tolerance=1e-6),
        CheckSpec("semigroup_contraction", {"functions": 2, "cases": ((0.0, 0.5),)},
                  mode="ordering"),
        CheckSpec("semigroup_mass"),
        CheckSpec("smoothing", {"thetas": (0.5, 1.0), "times": tuple(np.geomspace(1e-3, 1, 5))},
                  tolerance=0.05, mode="slope_fit"),
        CheckSpec("analytic_ray", mode="ordering"),
        CheckSpec("green_closed_form", tolerance=1e-12),
        CheckSpec("green_symmetry", tolerance=1e-13),
        CheckSpec("resolvent_identity", tolerance=1e-7),
        CheckSpec("resolvent_positivity_contraction", mode="ordering"),
        CheckSpec("laplace_kernel", {"points": 3, "kappas": (0.0,)}, tolerance=1e-5),
        CheckSpec("boundary_trace", tolerance=1e-4),
        CheckSpec("dissipativity", {"functions": 2}, mode="ordering"),
        CheckSpec("domain_c1", mode="ordering"),
        CheckSpec("reduction_remark"),
        CheckSpec("reduction_identity", tolerance=1e-10),
        CheckSpec("isometry", tolerance=1e-10),
        CheckSpec("generator_residual", {"specs": ((0.0, 0.0, -0.75, 0.5),)}, tolerance=0.1,
                  mode="ordering"),
        CheckSpec("classify_examples"),
        CheckSpec("threshold_consistency"),
        CheckSpec("q_gaussian_bound", mode="ordering"),
        CheckSpec("q_slope", {"s": 2.0, "alpha": -0.5, "beta": -1.0, "m": 0.0, "theta": 0.5,
                              "times": tuple(np.geomspace(1e-3, 1, 5))},
                  tolerance=0.05, mode="slope_fit"),
        CheckSpec("appendix_b", {"kappa": 0.0, "m": 1.0}, tolerance=1e-4),
        CheckSpec("absorption_constant", tolerance=1e-10),
        CheckSpec("absorption_domination", mode="ordering"),
        CheckSpec("truncated_potential", mode="ordering"),
    ]


SUITES = {"default": default_suite}


def _run_one(args):
    spec, seed, index = args
    if spec.name not in _REGISTRY:
        raise KeyError(f"unknown check {spec.name!r}")
    rng = np.random.default_rng([seed, index])
    return _REGISTRY[spec.name](spec, rng)


def run_suite(suite: Sequence[CheckSpec], seed: int = 0, jobs: int = 1,
              metadata: Optional[dict] = None) -> VerificationReport:
    """Run checks (in parallel when ``jobs > 1``) and merge in suite order.

    Each check draws from its own generator seeded by (seed, position), so
    results do not depend on ``jobs``.
    """
    names = [s.name for s in suite]
    unknown = [n for n in names if n not in _REGISTRY]
    if unknown:
        raise KeyError(f"unknown check(s): {', '.join(unknown)}")
    args = [(s, seed, i) for i, s in enumerate(suite)]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_one, args))
    else:
        results = [_run_one(a) for a in args]
    rep = VerificationReport(metadata={"seed": seed, "version": __version__,
                                       "checks_requested": len(suite)})
    rep.metadata.update(metadata or {})
    for spec, entries in zip(suite, results):
        for e in entries:
            rep.add(e)
            if "C" in e.detail:
                rep.metadata.setdefault("fitted_constants", {})[e.name] = {
                    "C": e.detail["C"], "s": e.detail.get("s")}
    return rep
