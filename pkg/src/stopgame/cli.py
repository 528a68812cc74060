"""Command-line entry point with reproducible, file-based workflows.

Exit codes: 0 success, 1 input error (bad flags, malformed files,
dimension mismatches), 2 integrity or convergence failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import InputError, IntegrityError, StopGameError
from .grids import write_value_csv
from .model import GameSpec, philox_rng
from .montecarlo import PureResponseFamily, exploit_gap
from .pdmp import simulate_Z
from . import examples as ex
from .serialize import (characteristics_from_params, strategy_from_json,
                        strategy_to_json)
from .solver import solve
from .conjugate import convex_conjugate_q, pair, ycoord

GAP_SLACK = 0.05


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); inputs errors are exit 1
        raise InputError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="stopgame",
                description="solve, dualize, simulate and verify two-player "
                            "stopping games with privately observed chains")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    common.add_argument("--threads", type=int,
                        default=int(os.environ.get("STOPGAME_THREADS", "0")) or None,
                        help="worker pool size (default: STOPGAME_THREADS, else "
                             "machine parallelism where pooling applies)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", parents=[common], help="compute the value grid of a game")
    s.add_argument("--game", required=True)
    s.add_argument("--grid", default="201x201", help="nodes per side, N or NxM")
    s.add_argument("--tol", type=float, default=1e-7)
    s.add_argument("--max-iter", type=int, default=200_000)
    s.add_argument("--out", required=True)

    d = sub.add_parser("dual", parents=[common], help="export a dual surface p,y,value,zone")
    d.add_argument("--oracle", choices=["e1"], help="use the closed-form surface")
    d.add_argument("--game", help="or: solve this game and conjugate numerically")
    d.add_argument("--grid", default="200x200")
    d.add_argument("--tol", type=float, default=1e-7)
    d.add_argument("--r", type=float, default=1.0)
    d.add_argument("--ybox", default="-1,3")
    d.add_argument("--yres", type=int, default=200)
    d.add_argument("--pres", type=int, default=200)
    d.add_argument("--out", required=True)

    e = sub.add_parser("example", parents=[common], help="emit closed-form benchmark curves")
    e.add_argument("which", choices=["e1", "e2"])
    e.add_argument("--what", default="value",
                   choices=["value", "dual", "pure", "blind"])
    e.add_argument("--r", type=float, default=None)
    e.add_argument("--a", type=float, default=1.0)
    e.add_argument("--b", type=float, default=1.0)
    e.add_argument("--h", default="0.5,2", help="h(0),h(1) chart endpoints")
    e.add_argument("--f", default="1,3", help="f(0),f(1) chart endpoints")
    e.add_argument("--res", type=int, default=200)
    e.add_argument("--ybox", default="-1,3")
    e.add_argument("--out", required=True)

    t = sub.add_parser("strategy", parents=[common], help="build an optimal-strategy descriptor")
    t.add_argument("--family", required=True, choices=["e1", "e2"])
    t.add_argument("--r", type=float, default=None)
    t.add_argument("--a", type=float, default=1.0)
    t.add_argument("--b", type=float, default=1.0)
    t.add_argument("--h", default="0.5,2")
    t.add_argument("--f", default="1,3")
    t.add_argument("--p", type=float, required=True)
    t.add_argument("--q", type=float, default=0.5)
    t.add_argument("--out", required=True)

    m = sub.add_parser("simulate", parents=[common], help="sample one auxiliary-process path")
    m.add_argument("--strategy", required=True)
    m.add_argument("--horizon", type=float, default=10.0)
    m.add_argument("--out", required=True)

    v = sub.add_parser("verify", parents=[common], help="verification reports")
    v.add_argument("what", choices=["optimality"])
    v.add_argument("--game", required=True)
    v.add_argument("--strategy", required=True)
    v.add_argument("--n", type=int, default=100_000)
    v.add_argument("--times", type=int, default=200)
    v.add_argument("--out")
    return p


def _parse_grid(text: str) -> tuple[int, int]:
    """Node counts per side ("201x201" or "401") -> grid resolutions."""
    parts = text.lower().split("x")
    try:
        counts = [int(x) for x in parts]
    except ValueError:
        counts = []
    if len(counts) == 1:
        counts = counts * 2
    if len(counts) != 2 or min(counts) < 1:
        raise InputError(f"bad --grid value {text!r}, expected nodes N or NxM")
    return max(counts[0] - 1, 1), max(counts[1] - 1, 1)


def _parse_pair_arg(text: str, name: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in text.split(","))
        return a, b
    except ValueError as exc:
        raise InputError(f"bad {name} value {text!r}, expected lo,hi") from exc


def _read_game(path: str) -> GameSpec:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"game file not found: {path}")
    return GameSpec.from_json(p.read_text())


def _check_out(path: str) -> Path:
    out = Path(path)
    if out.parent and not out.parent.exists():
        raise InputError(f"output directory does not exist: {out.parent}")
    return out


def _e2_params(args) -> ex.Example2Params:
    h0, h1 = _parse_pair_arg(args.h, "--h")
    f0, f1 = _parse_pair_arg(args.f, "--f")
    r = args.r if args.r is not None else 0.1
    return ex.Example2Params(a=args.a, b=args.b, r=r, h0=h0, h1=h1, f0=f0, f1=f1)


def _grid_csv_rows(header: str, rows) -> str:
    lines = [header]
    lines.extend(",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in row)
                 for row in rows)
    return "\n".join(lines) + "\n"


def _cmd_solve(args) -> int:
    spec = _read_game(args.game)
    out = _check_out(args.out)
    n_p, n_q = _parse_grid(args.grid)
    grid = solve(spec, n_p, n_q, tol=args.tol, max_iter=args.max_iter)
    write_value_csv(grid, out)
    print(f"solved in {grid.metadata['iterations']} sweeps "
          f"(residual {grid.metadata['residual']:.3e}) -> {out}")
    return 0


def _cmd_dual(args) -> int:
    out = _check_out(args.out)
    ylo, yhi = _parse_pair_arg(args.ybox, "--ybox")
    ps = np.linspace(0.0, 1.0, args.pres + 1)
    ys = np.linspace(ylo, yhi, args.yres + 1)
    rows = []
    if args.oracle == "e1":
        for p in ps:
            for y in ys:
                val, zone = ex.e1_dual(float(p), float(y))
                rows.append((float(p), float(y), val, zone))
    elif args.game:
        spec = _read_game(args.game)
        if spec.L > 2:
            raise InputError("dual export needs a two-state (or singleton) q side")
        n_p, n_q = _parse_grid(args.grid)
        grid = solve(spec, n_p, n_q, tol=args.tol)
        for p in ps:
            for y in ys:
                val = convex_conjugate_q(grid, pair(float(p)),
                                         ycoord(float(y))[: spec.L])
                rows.append((float(p), float(y), float(val), ""))
    else:
        raise InputError("dual needs either --oracle e1 or --game")
    out.write_text(_grid_csv_rows("p,y,value,zone", rows))
    print(f"dual surface ({len(rows)} rows) -> {out}")
    return 0


def _cmd_example(args) -> int:
    out = _check_out(args.out)
    if args.which == "e1":
        r = args.r if args.r is not None else 1.0
        grid = np.linspace(0.0, 1.0, args.res + 1)
        if args.what == "value":
            rows = [(float(p), float(q), ex.e1_value(float(p), float(q)))
                    for p in grid for q in grid]
            out.write_text(_grid_csv_rows("p,q,value", rows))
        elif args.what == "pure":
            rows = []
            for p in grid:
                for q in grid:
                    lo, hi = ex.e1_pure_values(float(p), float(q))
                    rows.append((float(p), float(q), lo, hi))
            out.write_text(_grid_csv_rows("p,q,lower,upper", rows))
        elif args.what == "dual":
            ylo, yhi = _parse_pair_arg(args.ybox, "--ybox")
            ys = np.linspace(ylo, yhi, args.res + 1)
            rows = []
            for p in grid:
                for y in ys:
                    val, zone = ex.e1_dual(float(p), float(y))
                    rows.append((float(p), float(y), val, zone))
            out.write_text(_grid_csv_rows("p,y,value,zone", rows))
        else:
            raise InputError("e1 supports --what value|pure|dual")
        print(f"example e1 {args.what} -> {out}")
        return 0
    params = _e2_params(args)
    grid = np.linspace(0.0, 1.0, args.res + 1)
    if args.what == "value":
        rows = [(float(p), ex.e2_value(params, float(p))) for p in grid]
        out.write_text(_grid_csv_rows("p,value", rows))
    elif args.what == "blind":
        blind = ex.e2_blind_value(params)
        rows = [(float(p), blind(float(p))) for p in grid]
        out.write_text(_grid_csv_rows("p,value", rows))
    else:
        raise InputError("e2 supports --what value|blind")
    print(f"example e2 {args.what} (case {ex.e2_case(params).value}) -> {out}")
    return 0


def _cmd_strategy(args) -> int:
    out = _check_out(args.out)
    if args.family == "e1":
        r = args.r if args.r is not None else 1.0
        if not (0.0 <= args.p <= 1.0 and 0.0 <= args.q <= 1.0):
            raise InputError("chart coordinates must lie in [0, 1]")
        strat = ex.e1_optimal_mu(args.p, args.q, r)
        claim = ex.e1_value(args.p, args.q)
        point = {"p": args.p, "q": args.q, "r": r}
    else:
        params = _e2_params(args)
        if not 0.0 <= args.p <= 1.0:
            raise InputError("chart coordinate must lie in [0, 1]")
        strat = ex.e2_optimal_mu(params, args.p)
        claim = ex.e2_value(params, args.p)
        point = {"p": args.p}
    out.write_text(strategy_to_json(strat, value_claim=claim, point=point) + "\n")
    print(f"strategy ({strat.case}) with value claim {claim:.6f} -> {out}")
    return 0


def _cmd_simulate(args) -> int:
    out = _check_out(args.out)
    path_file = Path(args.strategy)
    if not path_file.is_file():
        raise InputError(f"strategy file not found: {args.strategy}")
    strat, _ = strategy_from_json(path_file.read_text())
    desc = strat.descriptor()
    if "characteristics" not in desc:
        raise InputError(f"{desc['case']!r} strategies carry no auxiliary process")
    char = characteristics_from_params(desc["characteristics"])
    z0 = np.asarray(desc.get("z_flow", desc.get("z")), dtype=float)
    zpath = simulate_Z(char, z0, args.horizon, philox_rng(args.seed))
    rows = []
    for t, z in zip(zpath.ts, zpath.zs):
        rows.append((float(t), *map(float, z), 0))
    if zpath.jumped:
        rows.append((float(zpath.jump_time), *map(float, zpath.post_jump), 1))
    p_cols = ",".join(f"p{i}" for i in range(char.dim_p))
    y_cols = "".join(f",y{i}" for i in range(char.dim_y))
    out.write_text(_grid_csv_rows(f"t,{p_cols}{y_cols},jumped", rows))
    print(f"auxiliary path ({len(rows)} samples, jumped={zpath.jumped}) -> {out}")
    return 0


def _cmd_verify(args) -> int:
    spec = _read_game(args.game)
    path_file = Path(args.strategy)
    if not path_file.is_file():
        raise InputError(f"strategy file not found: {args.strategy}")
    strat, claim = strategy_from_json(path_file.read_text())
    if claim is None:
        raise InputError("strategy file carries no value_claim to verify against")
    if hasattr(strat, "initial_belief"):
        belief = np.asarray(strat.initial_belief(), dtype=float)
        if belief.size != spec.p0.size or np.abs(belief - spec.p0).max() > 1e-6:
            raise InputError(
                f"strategy was built for initial law {belief.tolist()} but the "
                f"game starts at {spec.p0.tolist()}")
    family = PureResponseFamily.for_game(spec, n=args.times)
    threads = args.threads or (os.cpu_count() or 1)
    report = exploit_gap(spec, strat, float(claim), family, args.n,
                         seed=args.seed, threads=threads)
    payload = report.to_payload()
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        _check_out(args.out).write_text(text)
    sys.stdout.write(text)
    failed = report.gap < -3.0 * report.std_error - GAP_SLACK
    return 2 if failed else 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {"solve": _cmd_solve, "dual": _cmd_dual, "example": _cmd_example,
                   "strategy": _cmd_strategy, "simulate": _cmd_simulate,
                   "verify": _cmd_verify}[args.command]
        return handler(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except (IntegrityError, StopGameError) as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
