"""Fenchel-type conjugates of saddle functions and the dual flow objects.

Two transforms appear, one per player:

* concave conjugate in the first argument,
  ``V*(x, q) = inf_p <x, p> - V(p, q)`` for ``x`` in R^K,
* convex conjugate in the second argument,
  ``V_*(p, y) = sup_q <q, y> - V(p, q)`` for ``y`` in R^L.

For two-state sides everything reduces to the scalar chart: we write
``V_*(p, y)`` for ``V_*((p, 1-p), (y, 0))`` and use the shift identity
``V_*((p,1-p), (y1,y2)) = y2 + V_*((p,1-p), (y1-y2, 0))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import InputError
from .grids import ValueGrid
from .model import as_simplex, marginal_flow

__all__ = [
    "concave_conjugate_p", "convex_conjugate_q", "subgradient_q",
    "obstacle_conjugate_p", "obstacle_conjugate_q",
    "DualPoint", "DualFlowState", "dual_flow",
    "dual_pde_residual_upper", "dual_pde_residual_lower",
    "pair", "ycoord",
]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def pair(p: float) -> np.ndarray:
    """Scalar chart -> two-state simplex point."""
    return np.array([p, 1.0 - p])


def ycoord(y: float) -> np.ndarray:
    """Scalar dual chart -> two-state dual vector (second coordinate pinned to 0)."""
    return np.array([y, 0.0])


@dataclass(frozen=True)
class DualPoint:
    """A dual-side evaluation point: a slope vector paired with the opponent belief."""

    vector: np.ndarray
    partner: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=float)
        if not np.all(np.isfinite(v)):
            raise InputError("dual vector must be finite")
        object.__setattr__(self, "vector", v)
        object.__setattr__(self, "partner", as_simplex(self.partner))


def _golden(f, a: float, b: float, sign: float, iters: int = 90):
    """Golden-section optimizer of a unimodal slice; sign=+1 max, -1 min."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = sign * f(c), sign * f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = sign * f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = sign * f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _p_slice(V, q: np.ndarray, dim_p: int):
    """Callable p_chart -> V(p, q) for a grid or a raw callable."""
    if isinstance(V, ValueGrid):
        if dim_p != 2:
            raise InputError("slice refinement needs a two-state first argument")
        return lambda c: V.value_at(pair(c), q)
    return lambda c: V(pair(c), q)


def concave_conjugate_p(V, x, q) -> float:
    """inf over the p-simplex of <x, p> - V(p, q).

    Grid input: exact node scan (the objective is piecewise affine), plus
    a golden-section polish on the scalar chart.  Callable input: coarse
    scan plus golden section; the objective is convex in p, so the slice
    is unimodal.
    """
    x = np.asarray(x, dtype=float)
    q = as_simplex(q)
    if isinstance(V, ValueGrid):
        pg = V.p_grid
        if x.size != pg.dim:
            raise InputError("dual vector dimension does not match the p-side")
        iq, wq = V.q_grid.interp_weights(np.atleast_2d(q[: V.q_grid.dim - 1]))
        col = sum(wq[0, b] * V.values[:, iq[0, b]] for b in range(iq.shape[1]))
        objective = pg.nodes @ x - col
        best = int(np.argmin(objective))
        if pg.dim != 2:
            return float(objective[best])
        chart = pg.chart[:, 0]
        lo = chart[max(best - 1, 0)]
        hi = chart[min(best + 1, pg.n_nodes - 1)]
        slice_fn = _p_slice(V, q, 2)
        _, val = _golden(lambda c: x[0] * c + x[1] * (1 - c) - slice_fn(c), lo, hi, sign=-1.0)
        return min(float(objective[best]), float(val))
    if x.size != 2:
        raise InputError("callable conjugation is implemented on the scalar chart")
    slice_fn = _p_slice(V, q, 2)
    obj = lambda c: x[0] * c + x[1] * (1 - c) - slice_fn(c)
    coarse = np.linspace(0.0, 1.0, 257)
    vals = np.array([obj(c) for c in coarse])
    best = int(np.argmin(vals))
    lo, hi = coarse[max(best - 1, 0)], coarse[min(best + 1, coarse.size - 1)]
    _, val = _golden(obj, lo, hi, sign=-1.0)
    return min(float(vals[best]), float(val))


def convex_conjugate_q(V, p, y) -> float:
    """sup over the q-simplex of <q, y> - V(p, q); dual to :func:`concave_conjugate_p`."""
    p = as_simplex(p)
    y = np.asarray(y, dtype=float)
    if isinstance(V, ValueGrid):
        qg = V.q_grid
        if y.size != qg.dim:
            raise InputError("dual vector dimension does not match the q-side")
        if qg.dim == 1:
            return float(y[0] - V.value_at(p, np.array([1.0])))
        ip, wp = V.p_grid.interp_weights(np.atleast_2d(p[: V.p_grid.dim - 1]))
        row = sum(wp[0, a] * V.values[ip[0, a], :] for a in range(ip.shape[1]))
        objective = qg.nodes @ y - row
        best = int(np.argmax(objective))
        if qg.dim != 2:
            return float(objective[best])
        chart = qg.chart[:, 0]
        lo = chart[max(best - 1, 0)]
        hi = chart[min(best + 1, qg.n_nodes - 1)]
        obj = lambda c: y[0] * c + y[1] * (1 - c) - V.value_at(p, pair(c))
        _, val = _golden(obj, lo, hi, sign=1.0)
        return max(float(objective[best]), float(val))
    if y.size != 2:
        raise InputError("callable conjugation is implemented on the scalar chart")
    obj = lambda c: y[0] * c + y[1] * (1 - c) - V(p, pair(c))
    coarse = np.linspace(0.0, 1.0, 257)
    vals = np.array([obj(c) for c in coarse])
    best = int(np.argmax(vals))
    lo, hi = coarse[max(best - 1, 0)], coarse[min(best + 1, coarse.size - 1)]
    _, val = _golden(obj, lo, hi, sign=1.0)
    return max(float(vals[best]), float(val))


def obstacle_conjugate_p(M, x, q) -> float:
    """Concave conjugate in p of a bilinear payoff: min_k x_k - (M q)_k."""
    M = np.asarray(M, dtype=float)
    return float(np.min(np.asarray(x, dtype=float) - M @ as_simplex(q)))


def obstacle_conjugate_q(M, p, y) -> float:
    """Convex conjugate in q of a bilinear payoff: max_l y_l - (M^T p)_l."""
    M = np.asarray(M, dtype=float)
    return float(np.max(np.asarray(y, dtype=float) - M.T @ as_simplex(p)))


def subgradient_q(V: ValueGrid, p, q) -> tuple[np.ndarray, np.ndarray]:
    """One-sided slope interval of q -> V(p, q) per chart coordinate.

    Returns ``(lo, hi)`` arrays of length ``L - 1``; any selection in
    between is a valid subgradient of the (convex) q-slice.  The usual
    selection is the midpoint unless a caller pins a face.
    """
    p = as_simplex(p)
    q = as_simplex(q)
    qg = V.q_grid
    if qg.dim == 1:
        z = np.zeros(0)
        return z, z
    ip, wp = V.p_grid.interp_weights(np.atleast_2d(p[: V.p_grid.dim - 1]))
    row = sum(wp[0, a] * V.values[ip[0, a], :] for a in range(ip.shape[1]))
    step = qg.step
    if qg.dim == 2:
        c = float(q[0])
        pos = c * qg.resolution
        i = int(round(pos))
        if abs(pos - i) < 1e-9:  # at a node: slopes of both adjacent cells
            left = (row[i] - row[i - 1]) / step if i > 0 else None
            right = (row[i + 1] - row[i]) / step if i < qg.n_nodes - 1 else None
            lo = left if left is not None else right
            hi = right if right is not None else left
        else:  # inside a cell: the interpolant is affine there
            i = int(math.floor(pos))
            lo = hi = (row[i + 1] - row[i]) / step
        return np.array([lo]), np.array([hi])
    # higher-dimensional charts: one-sided differences along each chart axis
    lo = np.empty(qg.dim - 1)
    hi = np.empty(qg.dim - 1)
    for c in range(qg.dim - 1):
        direction = np.zeros(qg.dim)
        direction[c] = 1.0
        direction[-1] = -1.0
        hi[c] = _one_sided(V, row, q, direction, step)
        lo[c] = -_one_sided(V, row, q, -direction, step)
    return lo, hi


def _grid_q_value(V: ValueGrid, row: np.ndarray, q: np.ndarray) -> float:
    iq, wq = V.q_grid.interp_weights(np.atleast_2d(q[: V.q_grid.dim - 1]))
    return float(sum(wq[0, b] * row[iq[0, b]] for b in range(iq.shape[1])))


def _one_sided(V: ValueGrid, row: np.ndarray, q: np.ndarray, direction: np.ndarray,
               step: float) -> float:
    eps = step
    target = q + eps * direction
    if np.any(target < -1e-12):
        eps = float(min(q[direction < 0] / -direction[direction < 0]))
        if eps <= 1e-14:
            return math.nan
        target = q + eps * direction
    return (_grid_q_value(V, row, np.maximum(target, 0.0)) - _grid_q_value(V, row, q)) / eps


@dataclass(frozen=True)
class DualFlowState:
    x: np.ndarray
    q: np.ndarray
    t: float


def dual_flow(x, q, R, Q, r: float, t: float) -> DualFlowState:
    """Characteristic dynamics of the dual problem.

    The slope vector grows as ``x' = (rI - R)x`` while the opponent
    belief follows its marginal flow ``q' = Q^T q``.
    """
    x = np.asarray(x, dtype=float)
    R = np.asarray(R, dtype=float)
    if t < 0:
        raise InputError("dual flow time must be nonnegative")
    x_t = expm(t * (r * np.eye(x.size) - R)) @ x
    q_t = marginal_flow(q, Q, t)
    return DualFlowState(x_t, q_t, t)


def _flow_quotient(vstar, a, b, da, db, r: float, eps: float) -> float:
    """(directional derivative along (da, db)) - r * vstar, by a forward difference."""
    scale = max(1.0, float(np.abs(da).max(initial=0.0)), float(np.abs(db).max(initial=0.0)))
    step = eps / scale
    base = vstar(a, b)
    ahead = vstar(a + step * da, b + step * db)
    return (ahead - base) / step - r * base


def dual_pde_residual_upper(vstar, hstar, x, q, R, Q, r: float,
                            eps: float = 1e-7) -> tuple[float, float]:
    """Residual pair for the concave conjugate V*(x, q).

    Returns ``(h*(x,q) - V*(x,q),  D V*(x,q; (rI-R)x, Q^T q) - r V*(x,q))``;
    the minimum of the pair is <= 0 (up to tolerance) for the true value.
    """
    x = np.asarray(x, dtype=float)
    q = as_simplex(q)
    R = np.asarray(R, dtype=float)
    Q = np.asarray(Q, dtype=float)
    gap = hstar(x, q) - vstar(x, q)
    dx = (r * np.eye(x.size) - R) @ x
    dq = Q.T @ q
    return float(gap), float(_flow_quotient(vstar, x, q, dx, dq, r, eps))


def dual_pde_residual_lower(vstar, fstar, p, y, R, Q, r: float,
                            eps: float = 1e-7) -> tuple[float, float]:
    """Residual pair for the convex conjugate V_*(p, y).

    Returns ``(V_*(p,y) - f_*(p,y),  r V_*(p,y) - D V_*(p,y; R^T p, (rI-Q)y))``;
    again the minimum must be <= 0 for the true value.
    """
    p = as_simplex(p)
    y = np.asarray(y, dtype=float)
    R = np.asarray(R, dtype=float)
    Q = np.asarray(Q, dtype=float)
    gap = vstar(p, y) - fstar(p, y)
    dp = R.T @ p
    dy = (r * np.eye(y.size) - Q) @ y
    return float(gap), float(-_flow_quotient(vstar, p, y, dp, dy, r, eps))