"""Heat kernel of the Bessel operator f'' + (kappa/x) f' on the half-line.

The kernel

    k(z, x, r) = (1/2z) r^kappa (x r)^nu exp(-(x^2 + r^2)/4z) I_nu(x r/2z),

with nu = (1 - kappa)/2, is assembled in log form.  Writing
``x^2 + r^2 = (x - r)^2 + 2xr`` lets the growth of I_nu cancel against the
Gaussian analytically, so no huge intermediate is ever formed.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bessel import log_bessel_ie
from .quadrature import (active_panels, clip_like, locality_width, refine,
                         windowed_apply, windowed_matrix)
from .spaces import Grid, GridFunction

LOG_MAX = 709.0
# subpanel width in units of the diffusion length sqrt(|z|) cos(arg z)
RESOLUTION = 0.5
DEFAULT_TOL = 1e-10


class SectorError(ValueError):
    pass


class KernelOverflowError(OverflowError):
    pass


@dataclass(frozen=True)
class KernelParams:
    kappa: float

    def __post_init__(self):
        if not self.kappa < 1:
            raise ValueError(f"kappa must be < 1, got {self.kappa}")

    @property
    def nu(self) -> float:
        return (1.0 - self.kappa) / 2.0


@dataclass(frozen=True)
class SectorPoint:
    """A point ``modulus * exp(i phase)`` of the open right half-plane."""

    modulus: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.modulus > 0:
            raise SectorError("modulus must be positive")
        if not abs(self.phase) < math.pi / 2:
            raise SectorError("|arg z| must be below pi/2")

    @classmethod
    def of(cls, z) -> "SectorPoint":
        if isinstance(z, SectorPoint):
            return z
        z = complex(z)
        return cls(abs(z), cmath.phase(z))

    @property
    def z(self):
        if self.phase == 0:
            return self.modulus
        return self.modulus * cmath.exp(1j * self.phase)

    @property
    def is_real(self) -> bool:
        return self.phase == 0

    def scaled(self, factor: float) -> "SectorPoint":
        return SectorPoint(self.modulus * factor, self.phase)


def _log_kernel(p: KernelParams, z, x, r):
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    w = x * r / (2 * z)
    lx, lr = np.log(x), np.log(r)
    return (-np.log(2 * z) + p.kappa * lr + p.nu * (lx + lr)
            - (x - r) ** 2 / (4 * z) + log_bessel_ie(p.nu, w))


def _exp_checked(lk):
    if np.any(np.real(lk) > LOG_MAX):
        raise KernelOverflowError("kernel value exceeds double range")
    return np.exp(lk)


def heat_kernel(p: KernelParams, z, x, r):
    """k_kappa(z, x, r), broadcasting over ``x`` and ``r``.

    Real and non-negative for real ``z``; complex otherwise.
    """
    zz = SectorPoint.of(z).z
    return _exp_checked(_log_kernel(p, zz, x, r))


def kernel_z_derivative(p: KernelParams, z, x, r):
    """d/dz k_kappa(z, x, r) in closed form.

    Uses z dk/dz = k [(x-r)^2/4z - (nu+1) + w (1 - I_{nu+1}(w)/I_nu(w))]
    with w = x r/2z, the ratio taken from scaled logs.
    """
    zz = SectorPoint.of(z).z
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    w = x * r / (2 * zz)
    k = heat_kernel(p, z, x, r)
    d = log_bessel_ie(p.nu + 1, w) - log_bessel_ie(p.nu, w)
    bracket = (x - r) ** 2 / (4 * zz) - (p.nu + 1) - w * np.expm1(d)
    return k * bracket / zz


def gaussian_envelope(p: KernelParams, z, x, r, C: float, s: float):
    """(C/sqrt|z|) (x/sqrt|z| ^ 1)^(1-kappa) (r/sqrt|z| ^ 1) exp(-|x-r|^2/(s|z|))."""
    m = SectorPoint.of(z).modulus
    sq = math.sqrt(m)
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    return (C / sq * np.minimum(x / sq, 1.0) ** (1 - p.kappa)
            * np.minimum(r / sq, 1.0) * np.exp(-((x - r) ** 2) / (s * m)))


def gaussian_bound_check(p: KernelParams, z, x, r, C: float, s: float) -> bool:
    """True iff |k| is below the Gaussian envelope at every given point."""
    return bool(np.all(np.abs(heat_kernel(p, z, x, r)) <= gaussian_envelope(p, z, x, r, C, s)))


def default_s(phase: float, margin: float = 1.25) -> float:
    """Gaussian rate with a margin over the sharp value 4/cos(arg z)."""
    return margin * 4.0 / math.cos(phase)


def fit_gaussian_constants(p: KernelParams, phase: float = 0.0, s: Optional[float] = None,
                           n_space: int = 50, n_time: int = 20):
    """Fit ``(C, s)`` of the Gaussian bound by a lattice sweep.

    ``s`` is fixed (default :func:`default_s`) and ``C`` is the largest
    ratio |k|/envelope(C=1) over an ``n_space^2 x n_time`` lattice in
    (x, r, |z|).
    """
    s = default_s(phase) if s is None else s
    xs = np.geomspace(1e-3, 20.0, n_space)
    ratio = 0.0
    for t in np.geomspace(1e-2, 10.0, n_time):
        z = SectorPoint(t, phase)
        X, R = np.meshgrid(xs, xs, indexing="ij")
        env = gaussian_envelope(p, z, X, R, 1.0, s)
        k = np.abs(heat_kernel(p, z, X, R))
        ok = env > 1e-290  # both sides underflow together far off the diagonal
        ratio = max(ratio, float(np.max(k[ok] / env[ok])))
    return ratio, s


# -- semigroup ---------------------------------------------------------------


def _check_generation_range(p: KernelParams, m: float) -> None:
    if not (p.kappa - 2 < m <= 1):
        warnings.warn(f"weight m={m} lies outside the generation range "
                      f"({p.kappa - 2}, 1]", RuntimeWarning, stacklevel=3)


def _setup(p: KernelParams, z: SectorPoint, grid: Grid, active=None):
    sq = math.sqrt(z.modulus)
    h = RESOLUTION * sq * math.cos(z.phase)
    return refine(grid, h, active)


def _window(z: SectorPoint, tol: float) -> float:
    return locality_width(4 * default_s(z.phase, 1.0) * z.modulus, tol)


def semigroup_values(p: KernelParams, z, f: GridFunction, xs, tol: float = DEFAULT_TOL):
    """(S(z) f)(x) at arbitrary points ``xs``."""
    z = SectorPoint.of(z)
    act = active_panels(f)
    xs = np.asarray(xs, dtype=float)
    if not act.any():
        return np.zeros(xs.shape, dtype=complex if not z.is_real else float)
    ref = _setup(p, z, f.grid, act)
    wf = ref.w * (ref.interp @ f.values)
    zz = z.z
    out = windowed_apply(lambda x, r: heat_kernel(p, zz, x, r), ref.r, wf,
                         xs.ravel(), _window(z, tol))
    return clip_like(out, f.values).reshape(xs.shape)


def apply_semigroup(p: KernelParams, z, f: GridFunction, out_grid: Optional[Grid] = None,
                    tol: float = DEFAULT_TOL) -> GridFunction:
    """S(z) f sampled on ``out_grid`` (default: the grid of ``f``)."""
    _check_generation_range(p, f.weight_m)
    out_grid = f.grid if out_grid is None else out_grid
    return GridFunction(out_grid, semigroup_values(p, z, f, out_grid.nodes, tol), f.weight_m)


def semigroup_matrix(p: KernelParams, z, grid: Grid, out_grid: Optional[Grid] = None,
                     tol: float = DEFAULT_TOL) -> np.ndarray:
    """Dense matrix of S(z) from samples on ``grid`` to nodes of ``out_grid``."""
    z = SectorPoint.of(z)
    out_grid = grid if out_grid is None else out_grid
    ref = _setup(p, z, grid)
    zz = z.z
    return windowed_matrix(lambda x, r: heat_kernel(p, zz, x, r), ref,
                           out_grid.nodes, _window(z, tol))
