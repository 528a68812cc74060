"""Discretized saddle functions on a product of simplices.

A ``SimplexGrid`` holds every barycentric node with coordinates that are
multiples of ``1/N``.  A ``ValueGrid`` pairs one grid per player with a
value array and supports the operations the solver is built from:
multilinear interpolation on the chart, and per-slice concave/convex
envelopes.

The validated path is two-state sides (1-d charts).  Higher dimensions
use Delaunay barycentric interpolation and qhull envelopes; both are
exact for piecewise-affine data but cost grows quickly with dimension.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError
from .model import GameSpec

__all__ = [
    "SimplexGrid", "ValueGrid", "payoff_grids",
    "upper_concave_envelope_1d", "lower_convex_envelope_1d",
    "concave_envelope", "convex_envelope",
    "concave_envelope_columns", "convex_envelope_rows",
    "write_value_csv", "read_value_csv",
]


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


@dataclass
class SimplexGrid:
    """All points of the ``dim``-simplex with coordinates in ``{0, 1/N, ..., 1}``."""

    dim: int
    resolution: int
    nodes: np.ndarray = field(init=False, repr=False)
    chart: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise InputError("simplex dimension must be >= 1")
        if self.resolution < 1:
            raise InputError("grid resolution must be >= 1")
        if self.dim == 1:
            self.nodes = np.array([[1.0]])
        elif self.dim == 2:
            c = np.linspace(0.0, 1.0, self.resolution + 1)
            self.nodes = np.column_stack([c, 1.0 - c])
        else:
            counts = np.array(list(_compositions(self.resolution, self.dim)), dtype=float)
            self.nodes = counts / self.resolution
        # Chart = first dim-1 coordinates (the last one is redundant).
        self.chart = self.nodes[:, : self.dim - 1]
        self._tri = None

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def step(self) -> float:
        return 1.0 / self.resolution if self.dim > 1 else 1.0

    def _triangulation(self):
        if self._tri is None:
            from scipy.spatial import Delaunay

            self._tri = Delaunay(self.chart)
        return self._tri

    def interp_weights(self, chart_points: np.ndarray):
        """Sparse interpolation stencil for chart points.

        Returns ``(idx, w)`` of shape ``(m, k)`` with
        ``value(point_i) = sum_a w[i, a] * values[idx[i, a]]``.
        """
        pts = np.atleast_2d(np.asarray(chart_points, dtype=float))
        m = pts.shape[0]
        if self.dim == 1:
            return np.zeros((m, 1), dtype=np.int64), np.ones((m, 1))
        if self.dim == 2:
            x = np.clip(pts[:, 0], 0.0, 1.0)
            pos = x * self.resolution
            lo = np.minimum(np.floor(pos).astype(np.int64), self.resolution - 1)
            w_hi = pos - lo
            idx = np.column_stack([lo, lo + 1])
            w = np.column_stack([1.0 - w_hi, w_hi])
            return idx, w
        tri = self._triangulation()
        simplex = tri.find_simplex(pts, tol=1e-12)
        if np.any(simplex < 0):
            raise InputError("interpolation point outside the simplex chart")
        d = self.dim - 1
        trans = tri.transform[simplex]
        bary = np.einsum("nij,nj->ni", trans[:, :d, :], pts - trans[:, d, :])
        w = np.column_stack([bary, 1.0 - bary.sum(axis=1)])
        idx = tri.simplices[simplex]
        return idx.astype(np.int64), w


def _hull_columns_core(x, vals, out):
    # Monotone-chain upper hull of each column, then chord interpolation.
    n, m = vals.shape
    hull = np.empty(n, dtype=np.int64)
    for j in range(m):
        k = 0
        for i in range(n):
            vi = vals[i, j]
            while k >= 2:
                a = hull[k - 2]
                b = hull[k - 1]
                # drop b when it lies on or below the chord a -> i
                if (vals[b, j] - vals[a, j]) * (x[i] - x[a]) <= (vi - vals[a, j]) * (x[b] - x[a]):
                    k -= 1
                else:
                    break
            hull[k] = i
            k += 1
        seg = 0
        for i in range(n):
            while seg < k - 1 and x[hull[seg + 1]] < x[i]:
                seg += 1
            a = hull[seg]
            b = hull[seg + 1] if seg + 1 < k else a
            if b == a:
                env = vals[a, j]
            else:
                w = (x[i] - x[a]) / (x[b] - x[a])
                env = (1.0 - w) * vals[a, j] + w * vals[b, j]
            if env < vals[i, j]:
                env = vals[i, j]
            out[i, j] = env
    return out


try:  # hot loop of the solver; the pure-python body above is the reference
    from numba import njit as _njit

    _hull_columns = _njit(cache=True)(_hull_columns_core)
except Exception:  # pragma: no cover - numba is only an accelerator
    _hull_columns = _hull_columns_core


def concave_envelope_columns(x: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """Upper concave envelope of every column over the 1-d chart ``x``."""
    out = np.empty_like(vals, dtype=float)
    _hull_columns(np.ascontiguousarray(x, dtype=float),
                  np.ascontiguousarray(vals, dtype=float), out)
    return out


def convex_envelope_rows(x: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """Lower convex envelope of every row over the 1-d chart ``x``."""
    return -concave_envelope_columns(x, -vals.T).T


def upper_concave_envelope_1d(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Least concave majorant of samples on an increasing 1-d grid."""
    return concave_envelope_columns(np.asarray(x, dtype=float),
                                    np.asarray(v, dtype=float)[:, None])[:, 0]


def lower_convex_envelope_1d(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    return -upper_concave_envelope_1d(x, -v)


def concave_envelope(chart: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Upper concave envelope of a slice on its chart (any dimension)."""
    if chart.shape[1] == 0:
        return v.copy()
    if chart.shape[1] == 1:
        return upper_concave_envelope_1d(chart[:, 0], v)
    from scipy.spatial import ConvexHull
    from scipy.spatial._qhull import QhullError

    pts = np.column_stack([chart, v])
    try:
        hull = ConvexHull(pts)
    except QhullError:
        try:
            hull = ConvexHull(pts, qhull_options="QJ")
        except QhullError:
            return v.copy()  # degenerate slice: already affine
    eqs = hull.equations  # rows [normal..., offset], normal @ x + offset <= 0
    top = eqs[eqs[:, -2] > 1e-12]
    if top.size == 0:
        return v.copy()
    # plane value: w = -(offset + n_chart @ x) / n_value, envelope = min over planes
    vals = -(top[:, -1][None, :] + chart @ top[:, :-2].T) / top[:, -2][None, :]
    return np.maximum(vals.min(axis=1), v)


def convex_envelope(chart: np.ndarray, v: np.ndarray) -> np.ndarray:
    return -concave_envelope(chart, -v)


@dataclass
class ValueGrid:
    """A saddle-function candidate sampled on a product of simplex grids."""

    p_grid: SimplexGrid
    q_grid: SimplexGrid
    values: np.ndarray
    spec: GameSpec | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.p_grid.n_nodes, self.q_grid.n_nodes):
            raise InputError(
                f"value array shape {self.values.shape} does not match grids "
                f"({self.p_grid.n_nodes}, {self.q_grid.n_nodes})"
            )

    def with_values(self, values: np.ndarray, **meta) -> "ValueGrid":
        md = dict(self.metadata)
        md.update(meta)
        return ValueGrid(self.p_grid, self.q_grid, values, self.spec, md)

    @classmethod
    def from_function(cls, spec: GameSpec, fn, N_p: int, N_q: int) -> "ValueGrid":
        pg = SimplexGrid(spec.K, N_p)
        qg = SimplexGrid(spec.L, N_q)
        vals = np.empty((pg.n_nodes, qg.n_nodes))
        for i, p in enumerate(pg.nodes):
            for j, q in enumerate(qg.nodes):
                vals[i, j] = fn(p, q)
        return cls(pg, qg, vals, spec)

    def interpolate(self, p_points: np.ndarray, q_points: np.ndarray) -> np.ndarray:
        """Values at paired points given by full simplex coordinates."""
        p_pts = np.atleast_2d(np.asarray(p_points, dtype=float))
        q_pts = np.atleast_2d(np.asarray(q_points, dtype=float))
        ip, wp = self.p_grid.interp_weights(p_pts[:, : self.p_grid.dim - 1])
        iq, wq = self.q_grid.interp_weights(q_pts[:, : self.q_grid.dim - 1])
        out = np.zeros(p_pts.shape[0])
        for a in range(ip.shape[1]):
            for b in range(iq.shape[1]):
                out += wp[:, a] * wq[:, b] * self.values[ip[:, a], iq[:, b]]
        return out

    def value_at(self, p, q) -> float:
        return float(self.interpolate(np.asarray(p, dtype=float)[None, :],
                                      np.asarray(q, dtype=float)[None, :])[0])


def payoff_grids(spec: GameSpec, p_grid: SimplexGrid, q_grid: SimplexGrid):
    """The two obstacles evaluated at every node pair (H, F)."""
    H = p_grid.nodes @ spec.h @ q_grid.nodes.T
    F = p_grid.nodes @ spec.f @ q_grid.nodes.T
    return H, F


def write_value_csv(grid: ValueGrid, path) -> None:
    """Export as ``p,q,value`` rows (two-state charts only), 17 significant digits.

    Metadata goes to a JSON sidecar at ``<path>.meta.json``.
    """
    if grid.p_grid.dim > 2 or grid.q_grid.dim > 2:
        raise InputError("CSV export is defined for scalar charts (state sets of size <= 2)")
    path = Path(path)
    p_chart = grid.p_grid.nodes[:, 0]
    q_chart = grid.q_grid.nodes[:, 0]
    lines = ["p,q,value"]
    for i, p in enumerate(p_chart):
        for j, q in enumerate(q_chart):
            lines.append(f"{p:.17g},{q:.17g},{grid.values[i, j]:.17g}")
    path.write_text("\n".join(lines) + "\n")
    sidecar = path.with_name(path.name + ".meta.json")
    sidecar.write_text(json.dumps(grid.metadata, indent=2, sort_keys=True, default=float) + "\n")


def read_value_csv(path):
    """Inverse of :func:`write_value_csv`; returns ``(p_chart, q_chart, values)``."""
    path = Path(path)
    rows = path.read_text().strip().splitlines()
    if not rows or rows[0] != "p,q,value":
        raise InputError(f"{path} is not a value-grid CSV")
    data = np.array([[float(x) for x in line.split(",")] for line in rows[1:]])
    p_chart = np.unique(data[:, 0])
    q_chart = np.unique(data[:, 1])
    if data.shape[0] != p_chart.size * q_chart.size:
        raise InputError("CSV rows do not form a full grid")
    values = np.full((p_chart.size, q_chart.size), np.nan)
    pi = np.searchsorted(p_chart, data[:, 0])
    qi = np.searchsorted(q_chart, data[:, 1])
    values[pi, qi] = data[:, 2]
    if np.any(np.isnan(values)):
        raise InputError("CSV rows do not form a full grid")
    return p_chart, q_chart, values
