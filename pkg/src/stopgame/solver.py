"""Value computation and residual verification on the belief product.

The value is found as the fixed point of one sweep

    V  ->  vex_q( cav_p( obstacle_step(V, delta) ) )

where the obstacle step is a discounted look-ahead along the marginal
flow clipped into the obstacle band ``[h, f]``, and the two envelope
projections enforce the saddle shape.  The residual checker then tests
the variational characterization pointwise: at extreme nodes of a slice
the obstacle/transport inequalities must hold with the right sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, InputError
from .grids import (SimplexGrid, ValueGrid, concave_envelope,
                    concave_envelope_columns, convex_envelope,
                    convex_envelope_rows, payoff_grids)
from .model import GameSpec, marginal_flow

__all__ = [
    "cav_p", "vex_q", "obstacle_step", "solve",
    "directional_derivative", "residual_check", "ResidualReport",
    "default_time_step",
]


def _cav_values(p_grid: SimplexGrid, values: np.ndarray) -> np.ndarray:
    if p_grid.dim == 1:
        return values.copy()
    if p_grid.dim == 2:
        return concave_envelope_columns(p_grid.chart[:, 0], values)
    out = np.empty_like(values)
    for j in range(values.shape[1]):
        out[:, j] = concave_envelope(p_grid.chart, values[:, j])
    return out


def _vex_values(q_grid: SimplexGrid, values: np.ndarray) -> np.ndarray:
    if q_grid.dim == 1:
        return values.copy()
    if q_grid.dim == 2:
        return convex_envelope_rows(q_grid.chart[:, 0], values)
    out = np.empty_like(values)
    for i in range(values.shape[0]):
        out[i, :] = convex_envelope(q_grid.chart, values[i, :])
    return out


def cav_p(grid: ValueGrid) -> ValueGrid:
    """Replace every q-slice by its upper concave envelope over the p-simplex."""
    return grid.with_values(_cav_values(grid.p_grid, grid.values))


def vex_q(grid: ValueGrid) -> ValueGrid:
    """Replace every p-slice by its lower convex envelope over the q-simplex."""
    return grid.with_values(_vex_values(grid.q_grid, grid.values))


def _flow_stencil(grid: SimplexGrid, G: np.ndarray, delta: float):
    """Interpolation stencil for every node displaced by the marginal flow."""
    if grid.dim == 1 or not np.any(G):
        idx = np.arange(grid.n_nodes, dtype=np.int64)[:, None]
        return idx, np.ones((grid.n_nodes, 1))
    flowed = np.array([marginal_flow(node, G, delta) for node in grid.nodes])
    return grid.interp_weights(flowed[:, : grid.dim - 1])


def _obstacle_apply(values, H, F, disc, ip, wp, iq, wq):
    flow_vals = np.zeros_like(values)
    for a in range(ip.shape[1]):
        rows = values[ip[:, a], :]
        for b in range(iq.shape[1]):
            flow_vals += (wp[:, a, None] * wq[None, :, b]) * rows[:, iq[:, b]]
    return np.clip(disc * flow_vals, H, F)


def default_time_step(spec: GameSpec, N_p: int, N_q: int) -> float:
    """One-cell CFL-style rule: flow displacement per step at most one cell.

    The discount cap is 0.1/r: the envelope projections introduce an
    O(r*delta) bias near chord junctions, and 0.1 keeps that bias an
    order of magnitude below the grid target accuracy.
    """
    delta = 0.1 / spec.r
    for G, N in ((spec.R, N_p), (spec.Q, N_q)):
        norm = float(np.abs(G).sum(axis=1).max()) if G.size else 0.0
        if norm > 0:
            delta = min(delta, 1.0 / (N * norm))
    return delta


def obstacle_step(grid: ValueGrid, delta: float) -> ValueGrid:
    """median(h, f, discounted value at the flowed point), nodewise."""
    if grid.spec is None:
        raise InputError("obstacle step needs a grid carrying its game spec")
    if not delta > 0:
        raise InputError("time step must be positive")
    spec = grid.spec
    H, F = payoff_grids(spec, grid.p_grid, grid.q_grid)
    ip, wp = _flow_stencil(grid.p_grid, spec.R, delta)
    iq, wq = _flow_stencil(grid.q_grid, spec.Q, delta)
    new = _obstacle_apply(grid.values, H, F, math.exp(-spec.r * delta), ip, wp, iq, wq)
    return grid.with_values(new)


def solve(spec: GameSpec, N_p: int, N_q: int, tol: float = 1e-7,
          max_iter: int = 200_000) -> ValueGrid:
    """Iterate the sweep from ``(f+h)/2`` until the sup-norm change drops below ``tol``."""
    if not tol > 0:
        raise InputError("tolerance must be positive")
    p_grid = SimplexGrid(spec.K, N_p)
    q_grid = SimplexGrid(spec.L, N_q)
    H, F = payoff_grids(spec, p_grid, q_grid)
    delta = default_time_step(spec, N_p, N_q)
    disc = math.exp(-spec.r * delta)
    ip, wp = _flow_stencil(p_grid, spec.R, delta)
    iq, wq = _flow_stencil(q_grid, spec.Q, delta)

    V = 0.5 * (H + F)
    change = math.inf
    for it in range(1, max_iter + 1):
        new = _obstacle_apply(V, H, F, disc, ip, wp, iq, wq)
        new = _cav_values(p_grid, new)
        new = _vex_values(q_grid, new)
        change = float(np.abs(new - V).max())
        V = new
        if change < tol:
            break
    else:
        raise ConvergenceError(f"solver did not converge in {max_iter} sweeps", change)
    # the median semantics guarantee the band; clipping only removes
    # envelope-arithmetic rounding at the 1e-16 scale
    V = np.clip(V, H, F)
    meta = {"iterations": it, "residual": change, "delta": delta,
            "N_p": N_p, "N_q": N_q, "tol": tol}
    return ValueGrid(p_grid, q_grid, V, spec, meta)


def directional_derivative(grid: ValueGrid, node, dir_p, dir_q) -> float:
    """One-sided difference quotient along ``(dir_p, dir_q)`` with a one-cell step."""
    p = np.asarray(node[0], dtype=float)
    q = np.asarray(node[1], dtype=float)
    dp = np.zeros(p.size) if dir_p is None else np.asarray(dir_p, dtype=float)
    dq = np.zeros(q.size) if dir_q is None else np.asarray(dir_q, dtype=float)
    mag = max(float(np.abs(dp).max(initial=0.0)), float(np.abs(dq).max(initial=0.0)))
    if mag < 1e-14:
        return 0.0
    for d in (dp, dq):
        if abs(d.sum()) > 1e-9 * (1.0 + float(np.abs(d).max(initial=0.0))):
            raise InputError("direction leaves the affine hull of the simplex")
    cell = min(grid.p_grid.step, grid.q_grid.step)
    eps = cell / mag
    p2, q2 = p + eps * dp, q + eps * dq
    slack = 1e-9
    if np.any(p2 < -slack) or np.any(q2 < -slack):
        raise InputError("direction exits the simplex")
    p2, q2 = np.maximum(p2, 0.0), np.maximum(q2, 0.0)
    base = grid.value_at(p, q)
    ahead = grid.value_at(p2, q2)
    return (ahead - base) / eps


def _neighbor_pairs(grid: SimplexGrid):
    """For each node, index pairs of equidistant straddling neighbors."""
    if grid.dim == 1:
        return [[] for _ in range(grid.n_nodes)]
    if grid.dim == 2:
        n = grid.n_nodes
        return [[(i - 1, i + 1)] if 0 < i < n - 1 else [] for i in range(n)]
    counts = np.rint(grid.nodes * grid.resolution).astype(int)
    lookup = {tuple(c): i for i, c in enumerate(counts)}
    dim = grid.dim
    pairs = [[] for _ in range(grid.n_nodes)]
    for i, c in enumerate(counts):
        for a in range(dim):
            for b in range(a + 1, dim):
                up = list(c); up[a] += 1; up[b] -= 1
                dn = list(c); dn[a] -= 1; dn[b] += 1
                ju, jd = lookup.get(tuple(up)), lookup.get(tuple(dn))
                if ju is not None and jd is not None:
                    pairs[i].append((jd, ju))
    return pairs


def _extreme_flags(values: np.ndarray, pairs, eps: float, axis: int) -> np.ndarray:
    """A node is extreme in its slice when no straddling chord matches its value.

    Slices of a saddle grid are concave/convex, so the tightest chord
    through a node is the one between its immediate neighbors; testing it
    is equivalent to testing all grid chords.  Vertex nodes (Dirac
    masses) are always extreme.
    """
    v = values if axis == 0 else values.T
    flags = np.ones(v.shape, dtype=bool)
    for i, plist in enumerate(pairs):
        if not plist:
            continue  # vertex node: always extreme
        matched = np.zeros(v.shape[1], dtype=bool)
        for (jlo, jhi) in plist:
            chord = 0.5 * (v[jlo, :] + v[jhi, :])
            matched |= np.abs(chord - v[i, :]) <= eps
        flags[i, :] = ~matched
    return flags if axis == 0 else flags.T


@dataclass
class ResidualReport:
    """Pointwise variational residuals of a grid, split by extremeness."""

    p_extreme: np.ndarray
    q_extreme: np.ndarray
    gap_low: np.ndarray       # V - h
    gap_high: np.ndarray      # f - V
    pde_residual: np.ndarray  # r V - D1 V . flow_p - D2 V . flow_q
    sub_violation: np.ndarray
    super_violation: np.ndarray
    eps_extreme: float

    @property
    def worst_sub_violation(self) -> float:
        return float(self.sub_violation.max(initial=0.0))

    @property
    def worst_super_violation(self) -> float:
        return float(self.super_violation.max(initial=0.0))


def _flow_derivative(grid: ValueGrid, side: str) -> np.ndarray:
    """D1 V(.; R^T p) or D2 V(.; Q^T q) at every node by one-sided differences."""
    spec = grid.spec
    if side == "p":
        g = grid.p_grid
        dirs = grid.p_grid.nodes @ spec.R  # row i: R^T p_i
    else:
        g = grid.q_grid
        dirs = grid.q_grid.nodes @ spec.Q
    mags = np.abs(dirs).max(axis=1, initial=0.0)
    out = np.zeros_like(grid.values)
    if not np.any(mags > 1e-14):
        return out
    cell = min(grid.p_grid.step, grid.q_grid.step)
    eps = np.where(mags > 1e-14, cell / np.maximum(mags, 1e-300), 0.0)
    moved = np.maximum(g.nodes + eps[:, None] * dirs, 0.0)
    idx, w = g.interp_weights(moved[:, : g.dim - 1])
    vals = grid.values if side == "p" else grid.values.T
    ahead = np.zeros_like(vals)
    for a in range(idx.shape[1]):
        ahead += w[:, a, None] * vals[idx[:, a], :]
    quot = np.where(eps[:, None] > 0, (ahead - vals) / np.where(eps[:, None] > 0, eps[:, None], 1.0), 0.0)
    return quot if side == "p" else quot.T


def residual_check(grid: ValueGrid, eps_extreme: float | None = None) -> ResidualReport:
    """Evaluate the variational inequalities of the saddle characterization.

    At p-extreme nodes the max/min expression must be <= 0 (its excess is
    the subsolution violation); at q-extreme nodes it must be >= 0.
    """
    if grid.spec is None:
        raise InputError("residual check needs a grid carrying its game spec")
    spec = grid.spec
    H, F = payoff_grids(spec, grid.p_grid, grid.q_grid)
    V = grid.values
    scale = float(np.abs(V).max(initial=0.0)) or 1.0
    if eps_extreme is None:
        N = max(grid.p_grid.resolution, grid.q_grid.resolution)
        eps_extreme = 10.0 / N**2 * scale
    p_ext = _extreme_flags(V, _neighbor_pairs(grid.p_grid), eps_extreme, axis=0)
    q_ext = _extreme_flags(V, _neighbor_pairs(grid.q_grid), eps_extreme, axis=1)
    pde = spec.r * V - _flow_derivative(grid, "p") - _flow_derivative(grid, "q")
    if not np.all(np.isfinite(pde)):
        raise InputError("non-finite residual encountered")
    expr = np.maximum(np.minimum(pde, V - H), V - F)
    sub = np.where(p_ext, np.maximum(expr, 0.0), 0.0)
    sup = np.where(q_ext, np.maximum(-expr, 0.0), 0.0)
    return ResidualReport(p_ext, q_ext, V - H, F - V, pde, sub, sup, eps_extreme)
