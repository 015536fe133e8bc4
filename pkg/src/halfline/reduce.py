"""Parameter algebra for x^alpha (f'' + a f'/x + b f/x^2) and its reduction.

With D = (a-1)^2 - 4b >= 0 and alpha != 2 the operator is conjugate to
``scale * G_kappa`` through U = T_{-alpha/2} M_l, where

    T_beta u(x) = |beta + 1| u(x^(1+beta))    maps X_n to X_{n(1+beta)+beta},
    M_l u(x)    = x^l u(x)                     maps X_n to X_{n-l}.

Both maps are applied to grid functions by moving the nodes, never by
interpolation, so weighted norms are preserved to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .kernel import DEFAULT_TOL, KernelParams, SectorPoint, apply_semigroup
from .spaces import Grid, GridFunction

CASES = ("c1", "c2", "c3", "out_of_range")
_SNAP_TOL = 1e-14
_EQ_TOL = 1e-12


def _snap(v: float) -> float:
    """Return the nearby simple rational if v is within rounding of one."""
    frac = Fraction(v).limit_denominator(10**6)
    return float(frac) if abs(float(frac) - v) < _SNAP_TOL * max(1.0, abs(v)) else v


@dataclass(frozen=True)
class OperatorSpec:
    alpha: float
    a: float
    b: float

    def __post_init__(self):
        if self.alpha == 2:
            raise ValueError("alpha = 2 admits no reduction (need alpha != 2)")

    @property
    def singular(self) -> bool:
        return self.alpha < 2

    def default_branch(self) -> int:
        return -1 if self.alpha < 2 else 1


def discriminant(spec: OperatorSpec) -> float:
    return _snap((spec.a - 1) ** 2 - 4 * spec.b)


def _sqrt_d(spec: OperatorSpec) -> float:
    d = discriminant(spec)
    if d < 0:
        raise ValueError(f"D = {d} < 0: no real reduction")
    return _snap(math.sqrt(d))


def thresholds(spec: OperatorSpec) -> dict:
    """Threshold exponents of the weight n.

    alpha < 2: ``n_*``, ``n_*^-``, ``n_*^+``; alpha > 2: ``n^*``, ``n_-^*``,
    ``n_+^*``.
    """
    sd = _sqrt_d(spec)
    a, al = spec.a, spec.alpha
    lo = _snap((1 - 2 * al + a - sd) / 2)
    hi = _snap((1 - 2 * al + a + sd) / 2)
    if spec.singular:
        return {"n_*": _snap((a - 3 - sd) / 2), "n_*^-": lo, "n_*^+": hi}
    return {"n^*": _snap((a - 3 + sd) / 2), "n_-^*": lo, "n_+^*": hi}


@dataclass(frozen=True)
class ReductionPlan:
    spec: OperatorSpec
    branch: int
    D: float
    l: float
    kappa: float
    scale: float
    thresholds: dict
    case_label: Optional[str] = None
    n: Optional[float] = None

    def weight_map(self, n: float) -> float:
        """m(n): U^{-1} maps X_n isometrically onto X_{m(n)}."""
        s = self.spec
        return _snap((2 * n + s.alpha - s.a + 1 + self.branch * math.sqrt(self.D)) / (2 - s.alpha))

    @property
    def params(self) -> KernelParams:
        return KernelParams(self.kappa)

    def boundary_condition(self) -> Optional[dict]:
        """Extra condition of case c3: where it sits and its power of x."""
        if self.case_label != "c3":
            return None
        sd, a = math.sqrt(self.D), self.spec.a
        if self.spec.singular:
            return {"at": "zero", "exponent": _snap((a + sd - 1) / 2)}
        return {"at": "infinity", "exponent": _snap((a - sd - 1) / 2)}

    def to_dict(self) -> dict:
        out = {"alpha": self.spec.alpha, "a": self.spec.a, "b": self.spec.b, "D": self.D,
               "branch": "+" if self.branch > 0 else "-", "l": self.l, "kappa": self.kappa,
               "scale": self.scale, "thresholds": dict(self.thresholds)}
        if self.n is not None:
            out["n"] = self.n
            out["m"] = self.weight_map(self.n)
            out["case"] = self.case_label
            bc = self.boundary_condition()
            if bc is not None:
                out["boundary_at"] = bc["at"]
                out["boundary_exponent"] = bc["exponent"]
        return out


def reduction_plan(spec: OperatorSpec, branch: Optional[int] = None,
                   n: Optional[float] = None) -> ReductionPlan:
    """l, kappa, scale and thresholds for the chosen branch (+1 or -1).

    The default branch is -1 for alpha < 2 and +1 for alpha > 2.
    """
    branch = spec.default_branch() if branch is None else int(np.sign(branch))
    if branch not in (-1, 1):
        raise ValueError("branch must be +1 or -1")
    sd = _sqrt_d(spec)
    two = 2 - spec.alpha
    l = _snap((-(spec.a - 1) + branch * sd) / two)
    kappa = _snap(1 + branch * 2 * sd / two)
    scale = _snap(two * two / 4)
    label = classify(spec, n) if n is not None else None
    return ReductionPlan(spec, branch, discriminant(spec), l, kappa, scale,
                         thresholds(spec), label, n)


def _close(u: float, v: float) -> bool:
    return abs(u - v) <= _EQ_TOL * max(1.0, abs(v))


def classify(spec: OperatorSpec, n: float) -> str:
    """Domain case c1, c2, c3 or out_of_range of the weight ``n``."""
    th = thresholds(spec)
    positive = discriminant(spec) > 0
    if spec.singular:
        low, mid, top = th["n_*"], th["n_*^-"], th["n_*^+"]
        if _close(n, top):
            return "c3"
        if low < n and (n <= mid or _close(n, mid)):
            return "c1"
        if positive and mid < n < top:
            return "c2"
        return "out_of_range"
    bottom, mid, top = th["n_-^*"], th["n_+^*"], th["n^*"]
    if _close(n, bottom):
        return "c3"
    if (mid <= n or _close(n, mid)) and n < top and not _close(n, top):
        return "c1"
    if positive and bottom < n < mid:
        return "c2"
    return "out_of_range"


# -- isometries --------------------------------------------------------------


def apply_m(f: GridFunction, l: float) -> GridFunction:
    """(M_l f)(x) = x^l f(x); X_n -> X_{n-l}."""
    return GridFunction(f.grid, f.grid.nodes**l * f.values, f.weight_m - l)


def apply_t(f: GridFunction, beta: float) -> GridFunction:
    """(T_beta f)(y) = |beta+1| f(y^(1+beta)) on the nodes y = x^(1/(1+beta))."""
    if beta == -1:
        raise ValueError("beta = -1 is not allowed")
    if beta == 0:
        return f
    p = 1.0 / (1.0 + beta)
    grid = f.grid.mapped(lambda x: x**p, lambda x: abs(p) * x ** (p - 1))
    vals = abs(1 + beta) * f.values
    if p < 0:
        vals = vals[::-1]
    n = f.weight_m
    return GridFunction(grid, np.ascontiguousarray(vals), _snap(n * (1 + beta) + beta))


def transform(f: GridFunction, beta: float, l: float) -> GridFunction:
    """T_beta M_l f."""
    if beta == -1:
        raise ValueError("beta = -1 is not allowed")
    return apply_t(apply_m(f, l), beta)


def _restore_grid(f: GridFunction, grid: Grid) -> GridFunction:
    """Put a round-tripped function back on ``grid`` (nodes agree to rounding)."""
    if len(f.grid) == len(grid) and np.allclose(f.grid.nodes, grid.nodes, rtol=1e-12, atol=0):
        return GridFunction(grid, f.values, f.weight_m)
    return f


def pull_back(plan: ReductionPlan, f: GridFunction) -> GridFunction:
    """U^{-1} f = M_{-l} T_{alpha/(2-alpha)} f; X_n -> X_{m(n)}."""
    al = plan.spec.alpha
    return apply_m(apply_t(f, al / (2 - al)), -plan.l)


def push_forward(plan: ReductionPlan, g: GridFunction, grid: Optional[Grid] = None) -> GridFunction:
    """U g = T_{-alpha/2} M_l g; X_m -> X_n."""
    out = transform(g, -plan.spec.alpha / 2, plan.l)
    return _restore_grid(out, grid) if grid is not None else out


def conjugated_semigroup(spec: OperatorSpec, n: float, t, f: GridFunction,
                         branch: Optional[int] = None, tol: float = DEFAULT_TOL) -> GridFunction:
    """e^{tA} f = U S_kappa(scale t) U^{-1} f for the operator of ``spec`` on X_n."""
    plan = reduction_plan(spec, branch, n)
    if plan.case_label == "out_of_range":
        raise ValueError(f"weight n={n} is outside every generation case for {spec}")
    if not plan.kappa < 1:
        raise ValueError(f"reduced kappa={plan.kappa} is not < 1 (needs D > 0 on this branch)")
    g = pull_back(plan, GridFunction(f.grid, f.values, n))
    z = SectorPoint.of(t).scaled(plan.scale)
    sg = apply_semigroup(plan.params, z, g, tol=tol)
    return push_forward(plan, sg, f.grid)


def operator_action(spec: OperatorSpec, x, f0, f1, f2):
    """x^alpha (f'' + a f'/x + b f/x^2) from f and its first two derivatives."""
    x = np.asarray(x, dtype=float)
    return x**spec.alpha * (f2 + spec.a * f1 / x + spec.b * f0 / x**2)
