"""Modified Bessel functions I_nu and K_nu of real order nu > -1.

Values are returned as :class:`ScaledValue` (``mantissa * exp(log_scale)``)
so that callers can merge exponential factors before exponentiating; the
heat kernel multiplies ``exp(-(x^2 + r^2)/4z)`` by ``I_nu(xr/2z)`` and both
factors overflow on their own for small ``z``.

Regimes for I_nu(z), |arg z| < pi/2:

* ascending series in double precision for ``|z| <= max(12, 2 nu)``;
* the same series in extended precision up to ``|z| < 17`` (complex only;
  for positive reals every term is positive and double precision suffices);
* the Hankel expansion, including the recessive ``exp(-z)`` companion, above.
  With the companion kept, the truncation error is about ``exp(-2|z|)``
  across the whole sector, so the expansion takes over well before the
  complex series loses digits to cancellation.

K_nu(x), x > 0, uses Temme's series for ``x <= 2`` and Steed's continued
fraction above, both at a reduced order ``|mu| <= 1/2`` followed by forward
recurrence. This handles integer orders without a separate code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.special import gammaln

SERIES_SWITCH = 12.0
ASYMPTOTIC_SWITCH = 17.0
DEFAULT_SECTOR_EPS = 1e-3

_EPS = np.finfo(float).eps
_MAX_SERIES_TERMS = 400
_MAX_CF_TERMS = 2000


class BesselDomainError(ValueError):
    """Argument or order outside the supported domain."""


@dataclass(frozen=True)
class BesselOrder:
    nu: float

    def __post_init__(self):
        if not np.isfinite(self.nu) or self.nu <= -1:
            raise BesselDomainError(f"order nu must satisfy nu > -1, got {self.nu}")


@dataclass(frozen=True)
class ScaledValue:
    """``mantissa * exp(log_scale)`` with ``0.5 <= |mantissa| < 2`` or zero.

    Both fields are numpy arrays of a common shape (0-d for scalars).
    """

    mantissa: np.ndarray
    log_scale: np.ndarray

    @classmethod
    def from_log(cls, log_value) -> "ScaledValue":
        """Build from a (complex) natural logarithm; ``-inf`` encodes zero."""
        log_value = np.asarray(log_value)
        real = np.real(log_value)
        finite = np.isfinite(real)
        scale = np.where(finite, np.round(np.where(finite, real, 0.0)), 0.0)
        mant = np.where(finite, np.exp(np.where(finite, log_value - scale, 0.0)), 0.0)
        if not np.iscomplexobj(log_value):
            mant = mant.real
        return cls(mant, scale)

    def log(self) -> np.ndarray:
        m = self.mantissa if np.iscomplexobj(self.mantissa) else self.mantissa.astype(float)
        with np.errstate(divide="ignore"):
            return np.log(m) + self.log_scale

    def value(self) -> np.ndarray:
        """Unscale; overflows to inf where the value is not representable."""
        with np.errstate(over="ignore"):
            return self.mantissa * np.exp(self.log_scale)

    def scaled(self, shift) -> np.ndarray:
        """Return ``value * exp(-shift)`` without forming ``value``."""
        with np.errstate(over="ignore", under="ignore"):
            return self.mantissa * np.exp(self.log_scale - shift)


def _as_order(order) -> BesselOrder:
    return order if isinstance(order, BesselOrder) else BesselOrder(float(order))


def _check_sector(z: np.ndarray, eps: float) -> None:
    if np.iscomplexobj(z):
        nz = z[z != 0]
        if nz.size and np.max(np.abs(np.angle(nz))) > np.pi / 2 - eps:
            raise BesselDomainError(
                f"|arg z| exceeds pi/2 - {eps:g}; outside the supported sector"
            )
    elif np.any(z < 0):
        raise BesselDomainError("negative real argument is outside the sector")


# --------------------------------------------------------------------------
# I_nu
# --------------------------------------------------------------------------


def _log_i_series(nu: float, z: np.ndarray, dtype) -> np.ndarray:
    """log I_nu(z) from the ascending series sum (z^2/4)^k / (k! Gamma(k+nu+1))."""
    zz = z.astype(dtype)
    q = zz * zz / 4
    term = np.ones_like(zz)
    total = np.ones_like(zz)
    comp = np.zeros_like(zz)  # Kahan compensation
    for k in range(1, _MAX_SERIES_TERMS):
        term = term * q / (k * (k + nu))
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if np.all(np.abs(term) <= 1e-19 * np.abs(total)):
            break
    total = total.astype(np.complex128 if np.iscomplexobj(z) else np.float64)
    with np.errstate(divide="ignore"):
        if np.iscomplexobj(z):
            return nu * np.log(z / 2) + np.log(total) - gammaln(nu + 1)
        return nu * np.log(z / 2) + np.log(total) - gammaln(nu + 1)


@lru_cache(maxsize=256)
def _hankel_coefficients(nu: float, nterms: int = 60) -> np.ndarray:
    """a_k(nu) = prod_{j<=k} (4 nu^2 - (2j-1)^2) / (k! 8^k)."""
    a = np.empty(nterms)
    a[0] = 1.0
    mu = 4 * nu * nu
    for k in range(1, nterms):
        a[k] = a[k - 1] * (mu - (2 * k - 1) ** 2) / (k * 8)
    return a


def _hankel_sums(nu: float, z: np.ndarray):
    a = _hankel_coefficients(nu)
    inv = 1.0 / z
    s_alt = np.zeros_like(z)
    s_pos = np.zeros_like(z)
    p = np.ones_like(z)
    prev = np.full(z.shape, np.inf)
    active = np.ones(z.shape, dtype=bool)
    for k in range(a.size):
        t = a[k] * p
        mag = np.abs(t)
        # stop at the first term that fails to shrink (optimal truncation)
        active &= mag < prev
        s_alt = s_alt + np.where(active, (-1) ** k * t, 0)
        s_pos = s_pos + np.where(active, t, 0)
        active &= mag > _EPS * 1e-3 * np.abs(s_alt)
        if not active.any():
            break
        prev = mag
        p = p * inv
    return s_alt, s_pos


def _log_i_asymptotic(nu: float, z: np.ndarray, shifted: bool = False) -> np.ndarray:
    s_alt, s_pos = _hankel_sums(nu, z)
    base = -0.5 * np.log(2 * np.pi * z)
    if not shifted:
        base = base + z
    if not np.iscomplexobj(z):
        return base + np.log(s_alt)
    sign = np.where(z.imag >= 0, 1.0, -1.0)
    companion = sign * 1j * np.exp(sign * 1j * nu * np.pi) * np.exp(-2 * z) * s_pos
    return base + np.log(s_alt + companion)


def log_bessel_i(nu: float, z) -> np.ndarray:
    """Natural log of I_nu(z) (complex log for complex z), vectorised."""
    return _log_i(nu, z, shifted=False)


def log_bessel_ie(nu: float, z) -> np.ndarray:
    """``log I_nu(z) - z`` without forming the large intermediate.

    For large |z| the Hankel expansion gives this difference directly, which
    keeps kernel exponents like ``-(x-r)^2/4t`` free of cancellation.
    """
    return _log_i(nu, z, shifted=True)


def _log_i(nu: float, z, shifted: bool) -> np.ndarray:
    z = np.asarray(z)
    if not np.iscomplexobj(z):
        z = z.astype(float)
    out = np.empty(z.shape, dtype=np.complex128 if np.iscomplexobj(z) else float)
    absz = np.abs(z)
    zero = absz == 0
    small = (~zero) & (absz <= max(SERIES_SWITCH, 2 * abs(nu)))
    big = absz >= max(ASYMPTOTIC_SWITCH, 2 * nu * nu)
    gap = ~(zero | small | big)
    if zero.any():
        if nu == 0:
            out[zero] = 0.0
        elif nu > 0:
            out[zero] = -np.inf
        else:
            raise BesselDomainError("I_nu(0) is infinite for nu < 0")
    if shifted and zero.any():
        out[zero] -= z[zero]
    if small.any():
        zs = z[small]
        out[small] = _log_i_series(nu, zs, np.float64 if not np.iscomplexobj(z) else np.complex128)
        if shifted:
            out[small] -= zs
    if gap.any():
        zg = z[gap]
        dtype = np.clongdouble if np.iscomplexobj(z) else np.float64
        out[gap] = _log_i_series(nu, zg, dtype)
        if shifted:
            out[gap] -= zg
    if big.any():
        out[big] = _log_i_asymptotic(nu, z[big], shifted)
    return out


def bessel_i(order, z, sector_eps: float = DEFAULT_SECTOR_EPS) -> ScaledValue:
    """I_nu(z) for real or sector-complex ``z`` as a :class:`ScaledValue`.

    Parameters
    ----------
    order : BesselOrder or float
        Order ``nu > -1``.
    z : array_like
        Non-negative reals, or complex values with ``|arg z| <= pi/2 - sector_eps``.
    """
    nu = _as_order(order).nu
    z = np.asarray(z)
    if not np.all(np.isfinite(z)):
        raise BesselDomainError("non-finite argument")
    _check_sector(z, sector_eps)
    return ScaledValue.from_log(log_bessel_i(nu, z))


# --------------------------------------------------------------------------
# K_nu
# --------------------------------------------------------------------------


@lru_cache(maxsize=256)
def _temme_gammas(mu: float):
    """gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu) for |mu| <= 1/2.

    gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu) cancels badly for small mu,
    so all four are formed with 40 digits beyond the magnitude of mu.
    """
    extra = 0 if mu == 0 else max(0, int(-math.log10(abs(mu))) + 1)
    with mpmath.workdps(40 + extra):
        m = mpmath.mpf(mu)
        gampl = mpmath.rgamma(1 + m)
        gammi = mpmath.rgamma(1 - m)
        if m == 0:
            gam1 = -mpmath.euler
        else:
            gam1 = (gammi - gampl) / (2 * m)
        gam2 = (gammi + gampl) / 2
        return float(gam1), float(gam2), float(gampl), float(gammi)


def _k_temme(mu: float, x: np.ndarray):
    """K_mu(x), K_{mu+1}(x) for x <= 2 (unscaled)."""
    gam1, gam2, gampl, gammi = _temme_gammas(mu)
    x2 = 0.5 * x
    pimu = np.pi * mu
    fact = 1.0 if abs(pimu) < 1e-15 else pimu / math.sin(pimu)
    d = -np.log(x2)
    e = mu * d
    with np.errstate(invalid="ignore", divide="ignore"):
        fact2 = np.where(np.abs(e) < 1e-15, 1.0, np.sinh(e) / e)
    ff = fact * (gam1 * np.cosh(e) + gam2 * fact2 * d)
    total = ff.copy()
    ee = np.exp(e)
    p = 0.5 * ee / gampl
    q = 0.5 / (ee * gammi)
    c = np.ones_like(x)
    dd = x2 * x2
    total1 = p.copy()
    mu2 = mu * mu
    for i in range(1, _MAX_SERIES_TERMS):
        ff = (i * ff + p + q) / (i * i - mu2)
        c = c * dd / i
        p = p / (i - mu)
        q = q / (i + mu)
        delta = c * ff
        total += delta
        total1 += c * (p - i * ff)
        if np.all(np.abs(delta) < 1e-17 * np.abs(total)):
            break
    return total, total1 * 2.0 / x


def _k_steed(mu: float, x: np.ndarray):
    """exp(x) K_mu(x), exp(x) K_{mu+1}(x) for x > 2 (Steed's CF2)."""
    mu2 = mu * mu
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25 - mu2
    q = np.full_like(x, a1)
    c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAX_CF_TERMS):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        if np.all(np.abs(dels) < 1e-17 * np.abs(s)):
            break
    h = a1 * h
    k0 = np.sqrt(np.pi / (2.0 * x)) / s
    k1 = k0 * (mu + x + 0.5 - h) / x
    return k0, k1


def _log_k_pair(nu: float, x: np.ndarray):
    """log K_nu(x) and log K_{nu+1}(x) for x > 0."""
    nu = abs(nu)
    nl = int(math.floor(nu + 0.5))
    mu = nu - nl
    out0 = np.empty_like(x)
    out1 = np.empty_like(x)
    lo = x <= 2.0
    for mask, scaled in ((lo, False), (~lo, True)):
        if not mask.any():
            continue
        xs = x[mask]
        k0, k1 = (_k_steed if scaled else _k_temme)(mu, xs)
        shift = xs if scaled else np.zeros_like(xs)
        # forward recurrence K_{mu+i+1} = K_{mu+i-1} + 2(mu+i)/x K_{mu+i};
        # renormalise each step to stay inside the float range
        lk = np.zeros_like(xs)
        for i in range(1, nl + 1):
            k0, k1 = k1, (mu + i) * (2.0 / xs) * k1 + k0
            big = np.abs(k1)
            lk = lk + np.log(big)
            k0, k1 = k0 / big, k1 / big
        out0[mask] = np.log(k0) + lk - shift
        out1[mask] = np.log(k1) + lk - shift
    return out0, out1


def log_bessel_k(nu: float, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return _log_k_pair(nu, x)[0]


def bessel_k(order, x) -> ScaledValue:
    """K_nu(x) for real ``x > 0`` as a :class:`ScaledValue`."""
    nu = _as_order(order).nu
    x = np.asarray(x)
    if np.iscomplexobj(x):
        raise BesselDomainError("K_nu is implemented for positive real arguments only")
    x = x.astype(float)
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise BesselDomainError("K_nu requires a finite positive argument")
    return ScaledValue.from_log(log_bessel_k(nu, x))


def wronskian(order, x) -> np.ndarray:
    """I_nu K_nu' - I_nu' K_nu from the derivative recurrences; equals -1/x."""
    nu = _as_order(order).nu
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise BesselDomainError("wronskian requires x > 0")
    li0 = log_bessel_i(nu, x)
    li1 = log_bessel_i(nu + 1, x)
    lk0, lk1 = _log_k_pair(nu, x)
    if nu < 0:
        # K_{nu+1} with nu+1 > 0 must not be folded by |nu|
        lk1 = log_bessel_k(nu + 1, x)
    # I(-K1 + nu/x K) - (I1 + nu/x I) K; the nu/x terms cancel identically
    return -(np.exp(li0 + lk1) + np.exp(li1 + lk0))


def derivatives_i(order, x):
    """I_nu, I_nu', I_nu'' at real x > 0 via I' = I_{nu+1} + (nu/x) I_nu."""
    nu = _as_order(order).nu
    x = np.asarray(x, dtype=float)
    i0, i1, i2 = (np.exp(log_bessel_i(nu + k, x)) for k in range(3))
    d1 = i1 + nu / x * i0
    d1_next = i2 + (nu + 1) / x * i1
    d2 = d1_next - nu / x**2 * i0 + nu / x * d1
    return i0, d1, d2


def derivatives_k(order, x):
    """K_nu, K_nu', K_nu'' at real x > 0 via K' = -K_{nu+1} + (nu/x) K_nu."""
    nu = _as_order(order).nu
    x = np.asarray(x, dtype=float)
    k0, k1, k2 = (np.exp(log_bessel_k(nu + k, x)) for k in range(3))
    d1 = -k1 + nu / x * k0
    d1_next = -k2 + (nu + 1) / x * k1
    d2 = -d1_next - nu / x**2 * k0 + nu / x * d1
    return k0, d1, d2


def ode_residual(order, x, kind: str = "i") -> np.ndarray:
    """Relative residual of x^2 v'' + x v' - (x^2 + nu^2) v = 0."""
    nu = _as_order(order).nu
    x = np.asarray(x, dtype=float)
    v, d1, d2 = (derivatives_i if kind == "i" else derivatives_k)(nu, x)
    res = x**2 * d2 + x * d1 - (x**2 + nu**2) * v
    scale = np.abs(x**2 * d2) + np.abs(x * d1) + np.abs((x**2 + nu**2) * v)
    return np.abs(res) / scale
