"""Refined-panel quadrature for integral operators on grid functions.

An operator ``(Kf)(x) = int k(x, r) f(r) dr`` is applied by subdividing the
panels of ``f``'s grid into subpanels no wider than the kernel's length
scale, interpolating ``f`` onto Gauss-Legendre nodes there, and summing
only over nodes inside a locality window around each output point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sps

from .spaces import Grid, GridFunction

NEGLIGIBLE = 1e-18
CHUNK = 128


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Refined:
    """Quadrature nodes on subpanels ``[a[j], b[j]]`` of the active panels.

    ``interp`` maps samples on the source grid to samples at ``r``.
    """

    r: np.ndarray
    w: np.ndarray
    a: np.ndarray
    b: np.ndarray
    q: int
    interp: sps.csr_matrix


def active_panels(f: GridFunction) -> np.ndarray:
    """Panels on which ``f`` is not negligible relative to its maximum."""
    g = f.grid
    mag = np.abs(f.values).reshape(g.panels, g.order).max(axis=1)
    top = mag.max()
    if top == 0:
        return np.zeros(g.panels, dtype=bool)
    return mag > NEGLIGIBLE * top


def clip_like(out: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Clip ``out`` at zero when it is real and ``values`` is non-negative.

    For a positive kernel the exact image of non-negative data is
    non-negative, so this never increases the error; it removes rounding
    and interpolation overshoot near the edge of the data's support.
    """
    if (not np.iscomplexobj(out) and not np.iscomplexobj(values)
            and values.size and values.min() >= 0):
        np.maximum(out, 0.0, out=out)
    return out


def refine(grid: Grid, h_max: float, active: Optional[np.ndarray] = None,
           q: Optional[int] = None, breaks=()) -> Refined:
    """Split every active panel into subpanels of width at most ``h_max``.

    Subpanels containing one of ``breaks`` (kinks of the kernel in r) are
    split there as well.
    """
    if not h_max > 0:
        raise QuadratureError("subpanel width must be positive")
    q = q or max(grid.order, 10)
    t, wt = np.polynomial.legendre.leggauss(q)
    lo, hi = grid.edges[:-1], grid.edges[1:]
    if active is not None:
        lo, hi = lo[active], hi[active]
    counts = np.maximum(1, np.ceil((hi - lo) / h_max)).astype(int)
    if counts.sum() > 2_000_000:
        raise QuadratureError("refinement too fine; kernel length scale too small for grid")
    pid = np.repeat(np.arange(lo.size), counts)
    k = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    width = (hi - lo)[pid] / counts[pid]
    a = lo[pid] + k * width
    b = np.where(k == counts[pid] - 1, hi[pid], a + width)
    for x in breaks:
        j = np.searchsorted(a, x, side="right") - 1
        if 0 <= j and a[j] < x < b[j]:
            a = np.insert(a, j + 1, x)
            b = np.insert(b, j, x)
    r = (0.5 * (b - a)[:, None] * t + 0.5 * (a + b)[:, None]).ravel()
    w = (0.5 * (b - a)[:, None] * wt).ravel()
    return Refined(r, w, a, b, q, grid.interp_matrix(r))


def windowed_apply(kernel: Callable, r: np.ndarray, wf: np.ndarray,
                   xs: np.ndarray, width: float) -> np.ndarray:
    """``sum_j kernel(x, r_j) wf_j`` over ``|x - r_j| <= width`` (r sorted)."""
    xs = np.asarray(xs, dtype=float)
    order = np.argsort(xs, kind="stable")
    dtype = np.result_type(wf, float)
    out = None
    for s in range(0, xs.size, CHUNK):
        idx = order[s:s + CHUNK]
        xb = xs[idx]
        lo = np.searchsorted(r, xb[0] - width, side="left")
        hi = np.searchsorted(r, xb[-1] + width, side="right")
        if hi <= lo:
            continue
        block = kernel(xb[:, None], r[None, lo:hi]) @ wf[lo:hi]
        if out is None:
            out = np.zeros(xs.size, dtype=np.result_type(block, dtype))
        out[idx] = block
    if out is None:
        out = np.zeros(xs.size, dtype=dtype)
    return out


def windowed_matrix(kernel: Callable, ref: Refined, xs: np.ndarray,
                    width: float) -> np.ndarray:
    """Dense matrix mapping source-grid samples to ``sum_j k(x, r_j) w_j f(r_j)``."""
    xs = np.asarray(xs, dtype=float)
    r, w, interp = ref.r, ref.w, ref.interp
    mat = None
    for s in range(0, xs.size, CHUNK):
        xb = xs[s:s + CHUNK]
        lo = np.searchsorted(r, xb.min() - width, side="left")
        hi = np.searchsorted(r, xb.max() + width, side="right")
        if hi <= lo:
            continue
        block = kernel(xb[:, None], r[None, lo:hi]) * w[lo:hi]
        if mat is None:
            mat = np.zeros((xs.size, interp.shape[1]), dtype=block.dtype)
        mat[s:s + CHUNK] = (interp[lo:hi].T @ block.T).T
    if mat is None:
        mat = np.zeros((xs.size, interp.shape[1]))
    return mat


def split_correction(kernel: Callable, ref: Refined, f: GridFunction,
                     xs: np.ndarray) -> np.ndarray:
    """Correction for kernels with a kink on the diagonal ``r = x``.

    For each ``x`` inside a subpanel, the plain Gauss rule on that subpanel
    is replaced by two Gauss rules on ``[a, x]`` and ``[x, b]``.
    """
    xs = np.asarray(xs, dtype=float)
    j = np.searchsorted(ref.a, xs, side="right") - 1
    hit = (j >= 0)
    hit[hit] &= xs[hit] <= ref.b[j[hit]]
    out = np.zeros(xs.size, dtype=np.result_type(f.values, float))
    if not hit.any():
        return out
    x, j = xs[hit], j[hit]
    q = ref.q
    t, wt = np.polynomial.legendre.leggauss(q)
    cols = j[:, None] * q + np.arange(q)
    fr = ref.interp @ f.values
    old = np.sum(kernel(x[:, None], ref.r[cols]) * (ref.w[cols] * fr[cols]), axis=1)
    a, b = ref.a[j][:, None], ref.b[j][:, None]
    xc = x[:, None]
    left = 0.5 * (xc - a) * t + 0.5 * (xc + a)
    right = 0.5 * (b - xc) * t + 0.5 * (b + xc)
    nodes = np.concatenate([left, right], axis=1)
    wts = np.concatenate([0.5 * (xc - a) * wt, 0.5 * (b - xc) * wt], axis=1)
    fn = (f.grid.interp_matrix(nodes.ravel()) @ f.values).reshape(nodes.shape)
    new = np.sum(kernel(xc, nodes) * wts * fn, axis=1)
    out = out.astype(np.result_type(out, new, old))
    out[hit] = new - old
    return out


def locality_width(scale: float, tol: float) -> float:
    """Half-width beyond which a Gaussian factor exp(-d^2/scale) is below tol."""
    return math.sqrt(scale * math.log(1.0 / tol))
