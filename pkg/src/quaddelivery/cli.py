"""Command-line entry point.

Exit codes: 0 success, 1 input error, 2 infeasible (or failed check),
3 flight divergence, 4 instance beyond the oracle's limits.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

from . import canny as cv
from .bnb import NodeLimitExceeded
from .control import (ConfigError, DivergenceDetected, fly_route, load_flight_config,
                      read_key_values, write_trajectory_csv)
from .fixtures import random_instance
from .pdp import (SPEC_PARAMS, InstanceError, MissingParameter, instance_from_dict,
                  instance_to_dict, spec_check, spec_passed)
from .pgm import PgmError, read_pgm, write_pgm
from .planner import InvalidPlan, plan_instance
from .routes import (Infeasible, OracleLimitExceeded, brute_force_solve, plan_to_dict,
                     waypoints_from_doc)
from .simplex import OPTIMAL, Tolerances

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_DIVERGED, EXIT_ORACLE = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


def _err(stage: str, msg) -> None:
    print(f"{stage}: {msg}", file=sys.stderr)


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}")


def _load_instance(path):
    try:
        return instance_from_dict(_read_json(path))
    except InstanceError as exc:
        raise InputError(f"{path}: {exc}")


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def cmd_plan(args) -> int:
    inst = _load_instance(args.instance)
    tol = Tolerances(gap=args.gap)
    try:
        res = plan_instance(inst, with_cuts=args.cuts, tol=tol)
    except InvalidPlan as exc:
        _err("validate", exc)
        return EXIT_INPUT
    except NodeLimitExceeded as exc:
        _err("solve", exc)
        return EXIT_INPUT
    st = res.mip.stats
    stats = {"nodes": st.nodes, "pivots": st.pivots, "wall_time": round(st.wall_time, 6),
             "columns": res.model.n_columns, "rows": len(res.model.rows), "cuts": args.cuts}
    if res.status != OPTIMAL:
        print(f"status {res.status}; nodes {st.nodes}, pivots {st.pivots}")
        if args.output:
            _write_json(args.output, {"status": res.status, "solver": stats})
        return EXIT_INFEASIBLE
    print(f"makespan {res.makespan:.9g}; nodes {st.nodes}, pivots {st.pivots}, {st.wall_time:.3f}s")
    if args.output:
        _write_json(args.output, plan_to_dict(inst, res.plan, {"status": OPTIMAL, "solver": stats}))
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = _load_instance(args.instance)
    try:
        plan = brute_force_solve(inst, max_legs=args.max_legs)
    except OracleLimitExceeded as exc:
        _err("oracle", exc)
        return EXIT_ORACLE
    except Infeasible as exc:
        print(f"status infeasible ({exc})")
        if args.output:
            _write_json(args.output, {"status": "infeasible"})
        return EXIT_INFEASIBLE
    print(f"makespan {plan.makespan:.9g}")
    if args.output:
        _write_json(args.output, plan_to_dict(inst, plan, {"status": OPTIMAL}))
    return EXIT_OK


def cmd_fly(args) -> int:
    doc = _read_json(args.plan)
    if not isinstance(doc, dict):
        raise InputError(f"{args.plan}: plan must be a JSON object")
    try:
        cfg = load_flight_config(args.config)
    except (ConfigError, OSError) as exc:
        raise InputError(f"config: {exc}")
    if args.dt is not None:
        if not args.dt > 0:
            raise InputError("--dt must be positive")
        cfg = replace(cfg, dt=args.dt)
    try:
        start, waypoints = waypoints_from_doc(doc, args.quad)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{args.plan}: malformed plan ({exc!r})")
    try:
        traj = fly_route(start, waypoints, cfg)
    except DivergenceDetected as exc:
        _err("fly", exc)
        if exc.trajectory is not None:
            write_trajectory_csv(args.output, exc.trajectory)
        return EXIT_DIVERGED
    write_trajectory_csv(args.output, traj)
    done = len(traj.captures) == len(waypoints)
    print(f"{len(traj.captures)}/{len(waypoints)} waypoints captured in {traj.times[-1]:.3f}s simulated"
          + ("" if done else " (time cap reached)"))
    return EXIT_OK


def cmd_edges(args) -> int:
    try:
        img = read_pgm(args.image)
    except (PgmError, OSError) as exc:
        raise InputError(f"{args.image}: {exc}")
    if min(img.shape) < 3:
        raise InputError(f"{args.image}: image must be at least 3x3 pixels")
    try:
        res = cv.canny_stages(img, args.sigma, args.t_low, args.t_high)
    except ValueError as exc:
        raise InputError(str(exc))
    write_pgm(args.output, res.edges)
    if args.dump_stages:
        os.makedirs(args.dump_stages, exist_ok=True)
        stem = Path(args.image).stem
        for name, grid in cv.stage_images(res).items():
            write_pgm(os.path.join(args.dump_stages, f"{stem}_{name}.pgm"), grid)
    print(f"{int((res.edges > 0).sum())} edge pixels; t_low {res.t_low:.6g}, t_high {res.t_high:.6g}")
    return EXIT_OK


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def load_airframe(path=None) -> dict:
    if path is None:
        text = resources.files("quaddelivery").joinpath("data/airframe.cfg").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    raw = read_key_values(text)
    out = {}
    for key in SPEC_PARAMS:
        if key not in raw:
            raise MissingParameter(key)
        val = raw[key].strip().lower()
        if val in _TRUE | _FALSE:
            out[key] = val in _TRUE
        else:
            try:
                out[key] = float(val)
            except ValueError:
                raise ConfigError(f"{key}: cannot read {raw[key]!r}")
    return out


def cmd_check(args) -> int:
    try:
        params = load_airframe(args.config)
    except MissingParameter as exc:
        _err("check", exc)
        return EXIT_INPUT
    except (ConfigError, OSError) as exc:
        raise InputError(f"config: {exc}")
    report = spec_check(params)
    for v in report:
        print(f"{v.number}. {v.name:<44} {'PASS' if v.passed else 'FAIL'}  {v.detail}")
    ok = spec_passed(report)
    print("all requirements met" if ok else "requirements not met")
    return EXIT_OK if ok else EXIT_INFEASIBLE


def cmd_gen_fixtures(args) -> int:
    os.makedirs(args.outdir, exist_ok=True)
    for i in range(args.count):
        seed = args.seed * 100_003 + i
        inst = random_instance(seed, max_quads=args.max_quads, max_requests=args.max_requests,
                               max_vehicles=args.max_vehicles)
        doc = instance_to_dict(inst)
        doc["seed"] = seed
        _write_json(os.path.join(args.outdir, f"instance_{i:03d}.json"), doc)
    print(f"wrote {args.count} instances to {args.outdir} (base seed {args.seed})")
    return EXIT_OK


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _nonneg(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quaddelivery", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("plan", help="solve a delivery instance exactly")
    s.add_argument("instance")
    s.add_argument("-o", "--output", help="plan JSON to write")
    s.add_argument("--cuts", action=argparse.BooleanOptionalAction, default=True,
                   help="add launch-leg charge/cargo cuts (default on)")
    s.add_argument("--gap", type=_positive, default=Tolerances().gap, help="relative optimality gap")
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("oracle", help="brute-force a tiny instance")
    s.add_argument("instance")
    s.add_argument("-o", "--output")
    s.add_argument("--max-legs", type=int, default=None, help="per-route leg bound")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("fly", help="simulate one quadcopter flying a plan")
    s.add_argument("plan")
    s.add_argument("-o", "--output", required=True, help="trajectory CSV to write")
    s.add_argument("--config", help="key = value file overriding the default flight settings")
    s.add_argument("--quad", help="quadcopter id (default: first route)")
    s.add_argument("--dt", type=float, default=None)
    s.set_defaults(func=cmd_fly)

    s = sub.add_parser("edges", help="Canny edge map of a PGM image")
    s.add_argument("image")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--sigma", type=_positive, default=1.4)
    s.add_argument("--t-low", type=_nonneg, default=None)
    s.add_argument("--t-high", type=_nonneg, default=None)
    s.add_argument("--dump-stages", metavar="DIR", help="write per-stage PGMs here")
    s.set_defaults(func=cmd_edges)

    s = sub.add_parser("check", help="check airframe parameters against the hardware requirements")
    s.add_argument("config", nargs="?", help="key = value airframe file (default: shipped airframe)")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("gen-fixtures", help="write a seeded corpus of tiny instances")
    s.add_argument("outdir")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, default=50)
    s.add_argument("--max-quads", type=int, default=2)
    s.add_argument("--max-requests", type=int, default=3)
    s.add_argument("--max-vehicles", type=int, default=1)
    s.set_defaults(func=cmd_gen_fixtures)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        _err(args.command, exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
