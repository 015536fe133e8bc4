"""Half-line grids, grid functions and weighted L1 norms.

A :class:`Grid` is a union of panels carrying ``order`` quadrature nodes
each.  Grids built here use Gauss-Legendre nodes; grids obtained by a change
of variables (:meth:`Grid.mapped`) keep the pulled-back nodes and the
Jacobian-weighted quadrature weights, so integrals transform exactly.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sps
from scipy.interpolate import PchipInterpolator

GUARD_BAND = 1.05


class GridError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Grid:
    nodes: np.ndarray
    weights: np.ndarray
    edges: np.ndarray
    order: int
    spec: Optional[tuple] = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise GridError("a grid needs at least two nodes")
        if nodes[0] <= 0:
            raise GridError("grid nodes must be positive")
        if np.any(np.diff(nodes) <= 0):
            raise GridError("grid nodes must be strictly increasing")
        if nodes.size != self.order * (len(self.edges) - 1):
            raise GridError("node count does not match panels * order")

    @property
    def panels(self) -> int:
        return len(self.edges) - 1

    @property
    def span(self) -> tuple[float, float]:
        return float(self.edges[0]), float(self.edges[-1])

    def __len__(self):
        return self.nodes.size

    def integrate(self, values) -> complex | float:
        return np.sum(self.weights * values)

    @cached_property
    def _bary(self) -> np.ndarray:
        x = self.nodes.reshape(self.panels, self.order)
        mid = 0.5 * (x[:, :1] + x[:, -1:])
        half = 0.5 * (x[:, -1:] - x[:, :1])
        u = (x - mid) / half
        diff = u[:, :, None] - u[:, None, :]
        idx = np.arange(self.order)
        diff[:, idx, idx] = 1.0
        return 1.0 / np.prod(diff, axis=2)

    def interp_matrix(self, points) -> sps.csr_matrix:
        """Sparse matrix of panelwise Lagrange interpolation onto ``points``.

        Rows for points outside the grid span are zero: functions are taken
        to vanish outside the grid.
        """
        pts = np.asarray(points, dtype=float).ravel()
        p, q = self.panels, self.order
        k = np.clip(np.searchsorted(self.edges, pts, side="right") - 1, 0, p - 1)
        inside = (pts >= self.edges[0]) & (pts <= self.edges[-1])
        xs = self.nodes.reshape(p, q)[k]
        diff = pts[:, None] - xs
        exact = diff == 0
        with np.errstate(divide="ignore", invalid="ignore"):
            c = self._bary[k] / diff
            c = c / c.sum(axis=1, keepdims=True)
        hit = exact.any(axis=1)
        c[hit] = exact[hit]
        c[~inside] = 0.0
        rows = np.repeat(np.arange(pts.size), q)
        cols = (k * q)[:, None] + np.arange(q)
        return sps.csr_matrix((c.ravel(), (rows, cols.ravel())), shape=(pts.size, self.nodes.size))

    def mapped(self, phi: Callable, dphi: Callable) -> "Grid":
        """Grid for the variable ``y = phi(x)``, phi monotone on the span."""
        nodes = phi(self.nodes)
        weights = self.weights * np.abs(dphi(self.nodes))
        edges = phi(self.edges)
        if nodes[-1] < nodes[0]:
            nodes, weights, edges = nodes[::-1], weights[::-1], edges[::-1]
        return Grid(np.ascontiguousarray(nodes), np.ascontiguousarray(weights),
                    np.ascontiguousarray(edges), self.order)

    def same_nodes(self, other: "Grid") -> bool:
        return self is other or (
            len(self) == len(other) and np.array_equal(self.nodes, other.nodes)
        )


def _panel_grid(edges: np.ndarray, order: int, spec=None) -> Grid:
    if not 2 <= order <= 64:
        raise GridError("panel order must lie in [2, 64]")
    t, w = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (b - a) * t + 0.5 * (a + b)).ravel()
    weights = (0.5 * (b - a) * w).ravel()
    return Grid(nodes, weights, np.asarray(edges, dtype=float), order, spec)


def make_geometric_grid(x_min: float, x_max: float, panels: int, order: int) -> Grid:
    """Gauss-Legendre panels between geometrically spaced boundaries."""
    if not (0 < x_min < x_max) or not np.isfinite(x_max):
        raise GridError(f"need 0 < x_min < x_max, got {x_min}, {x_max}")
    if panels < 1:
        raise GridError("need at least one panel")
    edges = x_min * (x_max / x_min) ** (np.arange(panels + 1) / panels)
    edges[0], edges[-1] = x_min, x_max
    return _panel_grid(edges, order, ("geometric", x_min, x_max, panels, order))


def make_grid(x_min: float = 1e-6, x_max: float = 50.0, ratio: float = 1.2,
              h_max: float = 0.5, order: int = 12) -> Grid:
    """Geometric panels near the origin, capped at width ``h_max`` further out.

    Kernels vary on the scale ``x`` near zero and on a fixed diffusion scale
    away from it; this grid resolves both with one construction.
    """
    if not (0 < x_min < x_max):
        raise GridError(f"need 0 < x_min < x_max, got {x_min}, {x_max}")
    if ratio <= 1 or h_max <= 0:
        raise GridError("need ratio > 1 and h_max > 0")
    edges = [x_min]
    while edges[-1] < x_max:
        edges.append(edges[-1] + min(edges[-1] * (ratio - 1), h_max))
    edges = np.array(edges)
    # absorb a sliver panel at the right end
    if len(edges) > 2 and x_max - edges[-2] < 0.25 * (edges[-2] - edges[-3]):
        edges = edges[:-1]
    edges[-1] = x_max
    return _panel_grid(edges, order, ("hybrid", x_min, x_max, ratio, h_max, order))


def grid_from_spec(spec) -> Grid:
    kind, *args = spec
    if kind == "geometric":
        x_min, x_max, panels, order = args
        return make_geometric_grid(float(x_min), float(x_max), int(panels), int(order))
    if kind == "hybrid":
        x_min, x_max, ratio, h_max, order = args
        return make_grid(float(x_min), float(x_max), float(ratio), float(h_max), int(order))
    raise GridError(f"unknown grid kind {kind!r}")


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a function in X_m on a grid; ``weight_m`` records m."""

    grid: Grid
    values: np.ndarray
    weight_m: float

    def __post_init__(self):
        if np.shape(self.values) != (len(self.grid),):
            raise GridError("values length must equal the number of grid nodes")

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    def with_values(self, values, weight_m: Optional[float] = None) -> "GridFunction":
        return GridFunction(self.grid, np.asarray(values),
                            self.weight_m if weight_m is None else weight_m)

    def __call__(self, points) -> np.ndarray:
        """Evaluate the panelwise interpolant (zero outside the grid span)."""
        pts = np.asarray(points, dtype=float)
        return (self.grid.interp_matrix(pts) @ self.values).reshape(pts.shape)

    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values) or not np.any(self.values.imag)


def sample(fn: Callable, grid: Grid, weight_m: float) -> GridFunction:
    return GridFunction(grid, np.asarray(fn(grid.nodes)), weight_m)


@dataclass(frozen=True)
class NormResult:
    value: float
    truncation_estimate: float

    @property
    def total(self) -> float:
        return self.value + self.truncation_estimate


def _head_estimate(edge: float, x0: float, x1: float, f0: float, f1: float, m: float) -> float:
    """Mass of |f| x^m on (0, edge) assuming a local power law f ~ c x^g."""
    if f0 == 0:
        return 0.0
    if f1 == 0:
        return math.inf
    g = (math.log(f1) - math.log(f0)) / math.log(x1 / x0)
    p = g + m + 1
    if p <= 0:
        return math.inf
    return f0 * x0**m * edge * (edge / x0) ** (g + m) / p


def _tail_estimate(edge: float, x0: float, x1: float, f0: float, f1: float, m: float) -> float:
    """Mass of |f| x^m on (edge, inf) assuming local exponential decay."""
    if f1 == 0:
        return 0.0
    if f0 == 0:
        return math.inf
    rate = -(math.log(f1) - math.log(f0)) / (x1 - x0) - m / x1
    if rate <= 0:
        return math.inf
    return f1 * x1**m * math.exp(-rate * (edge - x1)) / rate


def weighted_norm(f: GridFunction, m: Optional[float] = None) -> NormResult:
    """Composite-quadrature X_m norm of ``f`` over the grid span.

    ``m`` defaults to ``f.weight_m``.  The truncation estimate extrapolates
    the mass outside the span from the first and last panel; it is ``inf``
    when the local behaviour is not integrable (e.g. generic f with m <= -1).
    """
    m = f.weight_m if m is None else m
    a = np.abs(f.values)
    if not np.all(np.isfinite(a)):
        raise GridError("grid function has NaN or Inf samples")
    x = f.grid.nodes
    value = float(np.sum(f.grid.weights * a * x**m))
    q = f.grid.order
    e = f.grid.edges
    head = _head_estimate(e[0], x[0], x[q - 1], a[0], a[q - 1], m)
    tail = _tail_estimate(e[-1], x[-q], x[-1], a[-q], a[-1], m)
    return NormResult(value, head + tail)


def resample(f: GridFunction, target: Grid) -> GridFunction:
    """Monotone cubic (PCHIP) interpolation in log x onto ``target``."""
    src = f.grid
    if target.same_nodes(src):
        return f.with_values(np.array(f.values, copy=True))
    lo, hi = src.nodes[0], src.nodes[-1]
    if target.nodes[0] < lo / GUARD_BAND or target.nodes[-1] > hi * GUARD_BAND:
        raise GridError("target grid extends beyond the source guard band")
    lx = np.log(src.nodes)
    t = np.clip(np.log(target.nodes), lx[0], lx[-1])

    def interp(v):
        with np.errstate(over="ignore", divide="ignore"):  # tiny secants inside scipy
            out = PchipInterpolator(lx, v, extrapolate=False)(t)
        # PCHIP preserves sign up to rounding; remove the rounding
        return np.maximum(out, 0.0) if np.all(v >= 0) else out

    v = f.values
    out = interp(v.real) + 1j * interp(v.imag) if np.iscomplexobj(v) else interp(v)
    return GridFunction(target, out, f.weight_m)


# -- CSV ---------------------------------------------------------------------


def _fmt(v: float) -> str:
    return repr(float(v))


def write_csv(f: GridFunction, dest, metadata: Optional[dict] = None) -> None:
    """Write ``x,value_re[,value_im]`` rows, with m and grid in comments."""
    cplx = not f.is_real()
    lines = [f"# weight_m={_fmt(f.weight_m)}"]
    if f.grid.spec is not None:
        lines.append("# grid=" + ",".join(str(s) for s in f.grid.spec))
    for key, val in (metadata or {}).items():
        lines.append(f"# {key}={val}")
    lines.append("x,value_re,value_im" if cplx else "x,value_re")
    vals = np.asarray(f.values)
    for x, v in zip(f.grid.nodes, vals):
        row = [_fmt(x), _fmt(np.real(v))]
        if cplx:
            row.append(_fmt(np.imag(v)))
        lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    if isinstance(dest, (str, bytes)) or hasattr(dest, "__fspath__"):
        with open(dest, "w") as fh:
            fh.write(text)
    else:
        dest.write(text)


def _parse_spec(text: str) -> tuple:
    kind, *rest = text.split(",")
    return (kind, *rest)


def read_csv(src, grid: Optional[Grid] = None) -> GridFunction:
    """Read a grid function written by :func:`write_csv`.

    The grid is rebuilt from the ``# grid=`` comment when present, otherwise
    ``grid`` must be supplied; node positions are checked either way.
    """
    if isinstance(src, (str, bytes)) or hasattr(src, "__fspath__"):
        with open(src) as fh:
            text = fh.read()
    else:
        text = src.read()
    meta, header, rows = {}, None, []
    for line in io.StringIO(text):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key.strip()] = val.strip()
        elif header is None:
            header = line.split(",")
        else:
            rows.append([float(s) for s in line.split(",")])
    if header is None or header[:2] != ["x", "value_re"]:
        raise GridError("CSV header must start with x,value_re")
    if "weight_m" not in meta:
        raise GridError("CSV lacks a '# weight_m=' line")
    data = np.array(rows, dtype=float)
    if grid is None:
        if "grid" not in meta:
            raise GridError("CSV has no '# grid=' line and no grid was supplied")
        grid = grid_from_spec(_parse_spec(meta["grid"]))
    if len(grid) != data.shape[0] or not np.allclose(grid.nodes, data[:, 0], rtol=1e-15, atol=0):
        raise GridError("CSV nodes do not match the grid")
    values = data[:, 1] + 1j * data[:, 2] if len(header) > 2 else data[:, 1]
    return GridFunction(grid, values, float(meta["weight_m"]))
