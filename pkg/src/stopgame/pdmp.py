"""Piecewise-deterministic belief dynamics and optimal stopping rules.

The informed player's optimal randomized stopping is carried by a PDMP
``Z = (pi, xi)`` on a set ``E = E_H union S``: a deterministic flow with
drift ``alpha``, a single jump at intensity ``lam`` landing in the
absorbing set ``S`` through the jump map ``phi``.  States ``z`` are flat
vectors: the belief block (length ``dim_p``, a simplex point) followed by
the dual-slope block (length ``dim_y``, possibly absent).

Five structure conditions tie the characteristics to the dual value
``V_*``; :func:`sc_check` verifies them on sample sets, and the strategy
builders below turn admissible characteristics into stopping rules:

* ``flow`` (start in ``E_H``): stop at the conditional intensity
  ``lam(z_t) * phi_p(z_t)[k] / p_t[k]`` while the own chain sits in ``k``,
* ``split`` (start outside ``E``): randomize at time zero between an
  immediate stop and a ``flow`` start,
* ``stop_now`` (start in ``S``): stop immediately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InputError, IntegrityError
from .model import Trajectory, as_simplex, marginal_flow

__all__ = [
    "PdmpCharacteristics", "Orbit", "integrate_flow", "ZPath", "simulate_Z",
    "StructureReport", "sc_check",
    "MixedStoppingStrategy", "FlowIntensityStrategy", "SplitThenFlowStrategy",
    "StopNowStrategy", "NeverStopStrategy", "ConstantTimeStrategy",
    "InitialStateTimeStrategy",
    "build_mu_case1", "build_mu_case2", "build_mu_case3",
    "BeliefReport", "belief_consistency", "never_horizon",
]

_STALL_FRACTION = 1e-6
_ZERO_P = 1e-12

SPLIT_NOTE = ("time-0 split uses the belief-consistent conditional probability "
              "m * p''[k] / p[k] given the own state k, so that the posterior is "
              "p'' on the stop event and p' otherwise; a literal threshold on "
              "{u <= m} truncated to supp(p') would not produce that posterior "
              "and is treated as a statement typo")


def never_horizon(r: float) -> float:
    """Simulation stand-in for +infinity: discount beyond is below 1e-8."""
    return math.log(1e8) / r


@dataclass
class PdmpCharacteristics:
    """Drift / intensity / jump-map triple together with domain oracles.

    ``A`` is the linear drift of the compensated motion,
    ``blockdiag(R^T, rI - Q)``; the structure conditions require
    ``alpha(z) + lam(z) (phi(z) - z) = A z`` exactly on ``E_H``.
    """

    dim_p: int
    dim_y: int
    r: float
    A: np.ndarray
    alpha: Callable[[np.ndarray], np.ndarray]
    lam: Callable[[np.ndarray], float]
    phi: Callable[[np.ndarray], np.ndarray]
    in_EH: Callable[[np.ndarray], bool]
    in_S: Callable[[np.ndarray], bool]
    split: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, float]] | None = None
    snap: Callable[[np.ndarray], np.ndarray] | None = None
    quiescent: Callable[[np.ndarray], bool] | None = None
    label: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        dim = self.dim_p + self.dim_y
        if self.A.shape != (dim, dim):
            raise InputError(f"drift matrix must be {dim}x{dim}")

    @property
    def dim(self) -> int:
        return self.dim_p + self.dim_y

    def p_part(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float)[: self.dim_p]

    def y_part(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float)[self.dim_p:]

    def in_E(self, z: np.ndarray) -> bool:
        return self.in_EH(z) or self.in_S(z)

    def is_quiescent(self, z: np.ndarray) -> bool:
        return bool(self.quiescent(z)) if self.quiescent is not None else False


@dataclass
class Orbit:
    """Sampled solution of ``w' = alpha(w)`` from one starting point.

    ``stationary`` means the state is constant beyond ``ts[-1]``;
    ``quiescent`` means the intensity is identically zero beyond (the
    state may keep moving, but nothing observable depends on it).
    """

    ts: np.ndarray
    zs: np.ndarray
    lams: np.ndarray
    horizon: float
    stationary: bool
    quiescent: bool

    @property
    def t_end(self) -> float:
        return float(self.ts[-1])

    def state_at(self, t: float) -> np.ndarray:
        if t >= self.ts[-1]:
            return self.zs[-1].copy()
        i = int(np.searchsorted(self.ts, t, side="right")) - 1
        t0, t1 = self.ts[i], self.ts[i + 1]
        w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
        return (1 - w) * self.zs[i] + w * self.zs[i + 1]

    def lam_at(self, t: float) -> float:
        if t >= self.ts[-1]:
            return 0.0 if self.quiescent else float(self.lams[-1])
        i = int(np.searchsorted(self.ts, t, side="right")) - 1
        t0, t1 = self.ts[i], self.ts[i + 1]
        w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
        return float((1 - w) * self.lams[i] + w * self.lams[i + 1])


def _rk4(alpha, z, h):
    k1 = alpha(z)
    k2 = alpha(z + 0.5 * h * k1)
    k3 = alpha(z + 0.5 * h * k2)
    k4 = alpha(z + h * k3)
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_flow(char: PdmpCharacteristics, z0, horizon: float,
                   dt: float = 1e-3, truncate_quiescent: bool = False,
                   max_steps: int = 2_000_000) -> Orbit:
    """Integrate the drift from ``z0``, never leaving ``E_H``.

    Fixed-step RK4 with a local step ``dt / max(1, |alpha|)``.  A step
    that would exit ``E_H`` is bisected onto the boundary; if the field
    keeps pushing outward there, that is a flow-invariance violation and
    an :class:`IntegrityError` is raised.  Stationary points terminate the
    sampling (exact for an autonomous field).
    """
    z = np.asarray(z0, dtype=float).copy()
    if char.in_S(z):
        return Orbit(np.array([0.0]), z[None, :], np.array([0.0]), horizon, True, True)
    if not char.in_EH(z):
        raise InputError("flow must start inside E_H")
    ts = [0.0]
    zs = [z.copy()]
    lams = [float(char.lam(z))]
    t = 0.0
    stationary = quiescent = False
    for _ in range(max_steps):
        if t >= horizon:
            break
        if truncate_quiescent and char.is_quiescent(z):
            quiescent = True
            break
        a = char.alpha(z)
        speed = float(np.abs(a).max(initial=0.0))
        if speed < 1e-13:
            stationary = True
            break
        h = min(dt / max(1.0, speed), horizon - t)
        z_new = _rk4(char.alpha, z, h)
        if char.snap is not None:
            z_new = char.snap(z_new)
        if not char.in_EH(z_new):
            lo, hi = 0.0, h
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                cand = _rk4(char.alpha, z, mid)
                if char.snap is not None:
                    cand = char.snap(cand)
                if char.in_EH(cand):
                    lo = mid
                else:
                    hi = mid
            if lo < h * _STALL_FRACTION:
                raise IntegrityError(
                    "flow exits E_H: the drift pushes outward at the boundary "
                    f"(|alpha| = {speed:.3e} at t = {t:.6f})")
            h = lo
            z_new = _rk4(char.alpha, z, h)
            if char.snap is not None:
                z_new = char.snap(z_new)
        t += h
        z = z_new
        ts.append(t)
        zs.append(z.copy())
        lams.append(float(char.lam(z)))
    else:
        raise IntegrityError("flow integration exceeded the step budget")
    return Orbit(np.array(ts), np.array(zs), np.array(lams), horizon,
                 stationary, quiescent or (stationary and lams[-1] == 0.0))


class _Hazard:
    """Cumulative conditional stopping hazard per own-chain state.

    ``H[k](t) = int_0^t lam(z_s) * phi_p(z_s)[k] / (p_s)[k] ds`` with the
    0/0 = 0 convention; beyond the sampled orbit the rate is constant
    (stationary tail) or zero (quiescent tail).
    """

    def __init__(self, char: PdmpCharacteristics, orbit: Orbit):
        K = char.dim_p
        n = orbit.ts.size
        rho = np.zeros((n, K))
        for i in range(n):
            li = orbit.lams[i]
            if li <= 0.0:
                continue
            p = char.p_part(orbit.zs[i])
            phi_p = char.p_part(char.phi(orbit.zs[i]))
            for k in range(K):
                if p[k] > _ZERO_P:
                    rho[i, k] = li * phi_p[k] / p[k]
                elif phi_p[k] > 1e-9:
                    raise IntegrityError(
                        "jump target puts mass on a state the belief excludes "
                        "(support shrinkage violated along the orbit)")
        self.ts = orbit.ts
        self.H = np.zeros((n, K))
        if n > 1:
            mids = 0.5 * (rho[1:] + rho[:-1])
            self.H[1:] = np.cumsum(mids * np.diff(orbit.ts)[:, None], axis=0)
        self.tail_rate = rho[-1] if (orbit.stationary and not orbit.quiescent) else np.zeros(K)
        self.rho = rho

    def cumulative(self, k: int, t: float) -> float:
        if t >= self.ts[-1]:
            return float(self.H[-1, k] + self.tail_rate[k] * (t - self.ts[-1]))
        return float(np.interp(t, self.ts, self.H[:, k]))

    def inverse(self, k: int, t0: float, excess: float) -> float:
        """Smallest t >= t0 with H[k](t) - H[k](t0) >= excess (inf if never)."""
        target = self.cumulative(k, t0) + excess
        Hk = self.H[:, k]
        if target <= Hk[-1]:
            i = int(np.searchsorted(Hk, target, side="left"))
            if i == 0:
                return float(self.ts[0])
            h0, h1 = Hk[i - 1], Hk[i]
            w = 0.0 if h1 == h0 else (target - h0) / (h1 - h0)
            t = float(self.ts[i - 1] + w * (self.ts[i] - self.ts[i - 1]))
            return max(t, t0)
        if self.tail_rate[k] > 0.0:
            return max(float(self.ts[-1] + (target - Hk[-1]) / self.tail_rate[k]), t0)
        return math.inf

    def rho_at(self, k: int, t: float) -> float:
        if t >= self.ts[-1]:
            return float(self.tail_rate[k])
        return float(np.interp(t, self.ts, self.rho[:, k]))

    def max_rate(self) -> float:
        return float(self.rho.max(initial=0.0))


@dataclass
class ZPath:
    """One sampled PDMP path: deterministic segment, at most one jump, absorption."""

    z0: np.ndarray
    ts: np.ndarray
    zs: np.ndarray
    jump_time: float
    post_jump: np.ndarray | None
    horizon: float

    @property
    def jumped(self) -> bool:
        return math.isfinite(self.jump_time)

    def state_at(self, t: float) -> np.ndarray:
        if self.jumped and t >= self.jump_time:
            return self.post_jump.copy()
        if t >= self.ts[-1]:
            return self.zs[-1].copy()
        i = int(np.searchsorted(self.ts, t, side="right")) - 1
        t0, t1 = self.ts[i], self.ts[i + 1]
        w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
        return (1 - w) * self.zs[i] + w * self.zs[i + 1]


def simulate_Z(char: PdmpCharacteristics, z0, horizon: float,
               rng: np.random.Generator) -> ZPath:
    """Sample the auxiliary process: flow, one thinned jump, absorption in S."""
    z0 = np.asarray(z0, dtype=float)
    if char.in_S(z0):
        return ZPath(z0, np.array([0.0]), z0[None, :], math.inf, None, horizon)
    if not char.in_EH(z0):
        raise InputError("simulate_Z starts in E (pass exterior points through a split)")
    orbit = integrate_flow(char, z0, horizon, truncate_quiescent=True)
    lam_bar = 1.5 * float(orbit.lams.max(initial=0.0))
    jump_time = math.inf
    if lam_bar > 0.0:
        t = 0.0
        while True:
            t += rng.exponential(1.0 / lam_bar)
            if t >= horizon:
                break
            if rng.uniform() * lam_bar < orbit.lam_at(t):
                jump_time = t
                break
    post = None
    if math.isfinite(jump_time):
        post = char.phi(orbit.state_at(jump_time))
        if not char.in_S(post):
            raise IntegrityError("jump landed outside the absorbing set S")
    keep = orbit.ts <= min(jump_time, horizon)
    ts = orbit.ts[keep]
    zs = orbit.zs[keep]
    return ZPath(z0, ts, zs, jump_time, post, horizon)


# ---------------------------------------------------------------------------
# structure conditions


@dataclass
class StructureReport:
    """Per-condition outcome of a structure check over a sample set."""

    passed_by_condition: dict
    worst: dict
    failures: list
    counts: dict
    tol: float

    @property
    def passed(self) -> bool:
        return all(self.passed_by_condition.values())

    def __str__(self):
        lines = [f"structure check (tol={self.tol:g}): "
                 f"{'PASS' if self.passed else 'FAIL'}"]
        for name in sorted(self.passed_by_condition):
            ok = self.passed_by_condition[name]
            worst = self.worst.get(name)
            extra = f" worst={worst:.3e}" if worst is not None else ""
            lines.append(f"  {name}: {'ok' if ok else 'FAIL'}{extra}")
        lines.extend(f"  ! {msg}" for msg in self.failures[:8])
        return "\n".join(lines)


def _directional(vstar, z, d, eps=1e-7):
    scale = max(1.0, float(np.abs(d).max(initial=0.0)))
    step = eps / scale
    return (vstar(z + step * d) - vstar(z)) / step


def sc_check(char: PdmpCharacteristics, vstar, samples, tol: float = 1e-6,
             flow_horizon: float = 0.2, flow_dt: float = 2e-3) -> StructureReport:
    """Machine-check the structure conditions at each sample point.

    ``vstar`` is the dual value as a callable of the flat state.  Samples
    are classified through the membership oracles; exterior points need
    the characteristics to provide a ``split``.
    """
    names = ["sc1_membership", "sc2_absorbing", "sc2_invariant", "sc3_jump",
             "sc4_flatjump", "sc4_cone", "sc4_dynamic", "sc5_split"]
    ok = {n: True for n in names}
    worst = {n: 0.0 for n in names}
    failures: list[str] = []
    counts = {"EH": 0, "S": 0, "exterior": 0}

    def record(name, value, limit, msg):
        worst[name] = max(worst[name], value)
        if value > limit:
            ok[name] = False
            if len(failures) < 64:
                failures.append(f"{name}: {msg} (excess {value:.3e})")

    for z in samples:
        z = np.asarray(z, dtype=float)
        if char.in_S(z):
            counts["S"] += 1
            record("sc1_membership", float(char.in_EH(z)), 0.5,
                   f"S point {z} also claimed by E_H")
            record("sc2_absorbing", abs(char.lam(z)), 1e-10, f"lam != 0 on S at {z}")
            record("sc2_absorbing", float(np.abs(char.alpha(z)).max(initial=0.0)),
                   1e-10, f"alpha != 0 on S at {z}")
            continue
        if char.in_EH(z):
            counts["EH"] += 1
            az = char.A @ z
            resid = char.r * vstar(z) - _directional(vstar, z, az)
            record("sc1_membership", max(0.0, -resid), tol,
                   f"dual inequality fails at {z}")
            try:
                orbit = integrate_flow(char, z, flow_horizon, dt=flow_dt,
                                       truncate_quiescent=True)
                inside = all(char.in_E(w) for w in orbit.zs[:: max(1, orbit.zs.shape[0] // 16)])
                record("sc2_invariant", 0.0 if inside else 1.0, 0.5,
                       f"orbit from {z} leaves E")
            except IntegrityError as exc:
                record("sc2_invariant", 1.0, 0.5, f"orbit from {z}: {exc}")
            lam = float(char.lam(z))
            phi = np.asarray(char.phi(z), dtype=float)
            record("sc3_jump", 0.0 if char.in_S(phi) else 1.0, 0.5,
                   f"phi({z}) = {phi} not in S")
            record("sc3_jump", 0.0 if float(np.abs(phi - z).max()) > 1e-12 else 1.0,
                   0.5, f"phi({z}) equals z")
            if lam > 0.0:
                p = char.p_part(z)
                phi_p = char.p_part(phi)
                leak = float(phi_p[p <= _ZERO_P].max(initial=0.0))
                record("sc3_jump", leak, 1e-12,
                       f"phi moves mass onto a null state at {z}")
            flat = lam * (vstar(phi) - vstar(z) - _directional(vstar, z, phi - z))
            record("sc4_flatjump", abs(flat), tol, f"jump not along a flat of V_* at {z}")
            a = np.asarray(char.alpha(z), dtype=float)
            jump_dir = lam * (phi - z)
            cone = (_directional(vstar, z, a) + _directional(vstar, z, jump_dir)
                    - _directional(vstar, z, a + jump_dir))
            record("sc4_cone", abs(cone), tol,
                   f"directional derivatives not additive at {z}")
            dyn = float(np.abs(a + jump_dir - az).max(initial=0.0))
            record("sc4_dynamic", dyn, 1e-10,
                   f"alpha + lam (phi - z) != A z at {z}")
            continue
        counts["exterior"] += 1
        if char.split is None:
            raise InputError(f"sample {z} lies outside E and no split is available")
        z_flow, z_stop, m = char.split(z)
        z_flow = np.asarray(z_flow, dtype=float)
        z_stop = np.asarray(z_stop, dtype=float)
        record("sc5_split", 0.0 if (char.in_EH(z_flow) and char.in_S(z_stop)
                                    and 0.0 <= m <= 1.0) else 1.0,
               0.5, f"split of {z} leaves its pieces outside E_H x S")
        recon = float(np.abs((1 - m) * z_flow + m * z_stop - z).max())
        record("sc5_split", recon, 1e-9, f"split of {z} does not average back")
        mix = abs(vstar(z) - (1 - m) * vstar(z_flow) - m * vstar(z_stop))
        record("sc5_split", mix, tol, f"V_* not affine along the split of {z}")

    return StructureReport(ok, worst, failures, counts, tol)


# ---------------------------------------------------------------------------
# stopping strategies


class MixedStoppingStrategy:
    """A stopping rule of the own filtration plus an exogenous random stream.

    ``stopping_time`` consumes randomness from ``rng`` in an order
    determined only by the trajectory prefix up to the decision, which is
    what makes the rule adapted: altering the path strictly after the
    realized stopping time cannot change it.
    """

    case = "abstract"

    def stopping_time(self, traj: Trajectory, rng: np.random.Generator) -> float:
        raise NotImplementedError

    def belief(self, t: float) -> np.ndarray:
        """Conditional law of the own chain given no stop by ``t``."""
        raise NotImplementedError(f"{type(self).__name__} does not track a belief")

    def descriptor(self) -> dict:
        return {"case": self.case}


class NeverStopStrategy(MixedStoppingStrategy):
    case = "never"

    def __init__(self, R=None, p0=None):
        self.R = None if R is None else np.asarray(R, dtype=float)
        self.p0 = None if p0 is None else as_simplex(p0)

    def stopping_time(self, traj, rng):
        return math.inf

    def belief(self, t):
        if self.R is None or self.p0 is None:
            raise NotImplementedError("no chain attached")
        return marginal_flow(self.p0, self.R, t)

    def initial_belief(self):
        if self.p0 is None:
            raise NotImplementedError("no chain attached")
        return self.p0

    def descriptor(self):
        out = {"case": self.case}
        if self.R is not None:
            out["R"] = self.R.tolist()
        if self.p0 is not None:
            out["p0"] = self.p0.tolist()
        return out


class StopNowStrategy(MixedStoppingStrategy):
    case = "stop_now"

    def stopping_time(self, traj, rng):
        return 0.0


class ConstantTimeStrategy(MixedStoppingStrategy):
    case = "constant_time"

    def __init__(self, time: float):
        if time < 0:
            raise InputError("stopping time must be nonnegative")
        self.time = float(time)

    def stopping_time(self, traj, rng):
        return self.time

    def descriptor(self):
        return {"case": self.case, "time": self.time}


class InitialStateTimeStrategy(MixedStoppingStrategy):
    """One deterministic time per initial own state (a pure response)."""

    case = "state_times"

    def __init__(self, times):
        self.times = np.asarray(times, dtype=float)
        if np.any(self.times < 0):
            raise InputError("stopping times must be nonnegative")

    def stopping_time(self, traj, rng):
        return float(self.times[traj.initial_state])

    def descriptor(self):
        return {"case": self.case, "times": self.times.tolist()}


class FlowIntensityStrategy(MixedStoppingStrategy):
    """Stop at the conditional intensity carried by the characteristics' orbit.

    Two equivalent-in-law mechanisations: ``segment`` draws one
    exponential threshold against the cumulative hazard per inter-jump
    segment of the own chain (the fresh uniform at each restart becomes a
    fresh exponential, same law); ``thinning`` runs a global homogeneous
    candidate stream and accepts with probability ``rho(t, X_t) / rho_bar``.
    """

    case = "flow"

    def __init__(self, char: PdmpCharacteristics, z0, horizon: float | None = None,
                 method: str = "segment"):
        z0 = np.asarray(z0, dtype=float)
        if not char.in_EH(z0):
            raise InputError("case-1 strategies start inside E_H")
        if method not in ("segment", "thinning"):
            raise InputError(f"unknown mechanisation {method!r}")
        self.char = char
        self.z0 = z0
        self.t_max = never_horizon(char.r) if horizon is None else float(horizon)
        self.method = method
        self.orbit = integrate_flow(char, z0, self.t_max, truncate_quiescent=True)
        self.hazard = _Hazard(char, self.orbit)
        if method == "thinning":
            self.rho_bar = 1.5 * self.hazard.max_rate()
            if not math.isfinite(self.rho_bar) or self.rho_bar > 1e9:
                raise InputError("conditional intensity unbounded on the orbit; "
                                 "use the segment mechanisation")

    def initial_belief(self) -> np.ndarray:
        return self.char.p_part(self.z0)

    def belief(self, t):
        return self.char.p_part(self.orbit.state_at(min(t, self.t_max)))

    def stopping_time(self, traj, rng):
        end = min(traj.horizon, self.t_max)
        if self.method == "thinning":
            if self.rho_bar <= 0.0:
                return math.inf
            t = 0.0
            while True:
                t += rng.exponential(1.0 / self.rho_bar)
                if t >= end:
                    return math.inf
                k = traj.state_at(t)
                if rng.uniform() * self.rho_bar < self.hazard.rho_at(k, t):
                    return t
        times = traj.times
        states = traj.states
        for n in range(times.size):
            seg_start = float(times[n])
            seg_end = float(times[n + 1]) if n + 1 < times.size else end
            if seg_start >= end:
                break
            seg_end = min(seg_end, end)
            excess = rng.exponential(1.0)
            t = self.hazard.inverse(int(states[n]), seg_start, excess)
            if t < seg_end:
                return t
        return math.inf

    def descriptor(self):
        return {"case": self.case, "z": self.z0.tolist(), "horizon": self.t_max,
                "method": self.method, "characteristics": dict(self.char.params)}


class SplitThenFlowStrategy(MixedStoppingStrategy):
    """Randomize at time zero between stopping (posterior in S) and a flow start."""

    case = "split"

    def __init__(self, char: PdmpCharacteristics, z, z_flow, z_stop, m: float,
                 horizon: float | None = None, vstar=None, tol: float = 1e-6):
        z = np.asarray(z, dtype=float)
        z_flow = np.asarray(z_flow, dtype=float)
        z_stop = np.asarray(z_stop, dtype=float)
        if not (0.0 <= m <= 1.0):
            raise InputError("split mass must lie in [0, 1]")
        if float(np.abs((1 - m) * z_flow + m * z_stop - z).max()) > 1e-9:
            raise InputError("split does not average back to the start point")
        if not char.in_EH(z_flow) or not char.in_S(z_stop):
            raise InputError("split pieces must lie in E_H and S")
        if vstar is not None:
            gap = abs(vstar(z) - (1 - m) * vstar(z_flow) - m * vstar(z_stop))
            if gap > tol:
                raise InputError(f"V_* is not affine along the split (gap {gap:.3e})")
        self.char = char
        self.z = z
        self.m = float(m)
        self.z_stop = z_stop
        self.flow = FlowIntensityStrategy(char, z_flow, horizon)
        self.note = SPLIT_NOTE

    def initial_belief(self) -> np.ndarray:
        return self.char.p_part(self.z)

    def belief(self, t):
        return self.flow.belief(t)

    def stopping_time(self, traj, rng):
        k = traj.initial_state
        p_k = float(self.char.p_part(self.z)[k])
        stop_k = float(self.char.p_part(self.z_stop)[k])
        prob = 0.0 if p_k <= _ZERO_P else min(1.0, self.m * stop_k / p_k)
        if rng.uniform() < prob:
            return 0.0
        return self.flow.stopping_time(traj, rng)

    def descriptor(self):
        return {"case": self.case, "z": self.z.tolist(),
                "z_flow": self.flow.z0.tolist(), "z_stop": self.z_stop.tolist(),
                "m": self.m, "horizon": self.flow.t_max,
                "characteristics": dict(self.char.params), "note": self.note}


def build_mu_case1(char: PdmpCharacteristics, z0, horizon: float | None = None,
                   method: str = "segment") -> FlowIntensityStrategy:
    return FlowIntensityStrategy(char, z0, horizon, method)


def build_mu_case2(char: PdmpCharacteristics, z, decomposition=None,
                   horizon: float | None = None, vstar=None) -> SplitThenFlowStrategy:
    if decomposition is None:
        if char.split is None:
            raise InputError("no split available for exterior starting points")
        decomposition = char.split(np.asarray(z, dtype=float))
    z_flow, z_stop, m = decomposition
    return SplitThenFlowStrategy(char, z, z_flow, z_stop, m, horizon, vstar=vstar)


def build_mu_case3(z=None) -> StopNowStrategy:
    return StopNowStrategy()


@dataclass
class BeliefReport:
    t: float
    predicted: np.ndarray
    empirical: np.ndarray
    z_scores: np.ndarray
    n_survivors: int
    n: int
    inconclusive: bool

    @property
    def consistent(self) -> bool:
        return (not self.inconclusive) and bool(np.all(np.abs(self.z_scores) <= 3.0))


def belief_consistency(strategy: MixedStoppingStrategy, R, t: float, n: int,
                       seed: int = 0, horizon: float | None = None) -> BeliefReport:
    """Estimate P(X_t = k | no stop by t) and compare with the tracked belief.

    The chain starts from the strategy's initial belief and runs under
    generator ``R``; survivors of the stopping rule at ``t`` are binned
    by state and z-scored against the deterministic belief flow.
    """
    from .model import ChainSampler, philox_rng

    if not hasattr(strategy, "initial_belief"):
        raise InputError("strategy does not expose an initial belief")
    p0 = strategy.initial_belief()
    predicted = np.asarray(strategy.belief(t), dtype=float)
    K = p0.size
    horizon = horizon if horizon is not None else max(2.0 * t, 1.0)
    sampler = ChainSampler(R, p0)
    counts = np.zeros(K)
    survivors = 0
    for i in range(n):
        rng = philox_rng(seed, i)
        traj = sampler.sample(horizon, rng)
        mu = strategy.stopping_time(traj, rng)
        if mu > t:
            survivors += 1
            counts[traj.state_at(t)] += 1
    inconclusive = survivors < 100
    empirical = counts / survivors if survivors else np.zeros(K)
    se = np.sqrt(np.maximum(predicted * (1 - predicted), 1e-12) / max(survivors, 1))
    z = (empirical - predicted) / se
    return BeliefReport(t, predicted, empirical, z, survivors, n, inconclusive)
