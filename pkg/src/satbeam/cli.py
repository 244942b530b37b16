"""Command line front end.

    satbeam run --config sweep.cfg [--seed S] [--out DIR] [--trials T] [--schemes a,b,c]
    satbeam solve --config scene.cfg --dump-trace
    satbeam oracle --cost cost.csv
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .assignment import assignment_total, brute_force_assignment, hungarian
from .baselines import SCHEMES
from .geometry import build_scene
from .harness.config import ConfigError, parse_config
from .harness.sweep import derive_seed, emit_report, run_sweep
from .metrics import sum_rate
from .solver import solve

TRACE_HEADER = ("iteration", "objective", "sum_rate_bps", "beta", "power_w", "assignment_accepted")


def _load_config(args):
    config = parse_config(args.config)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        changes["trials"] = args.trials
    if getattr(args, "schemes", None):
        changes["schemes"] = tuple(s.strip() for s in args.schemes.split(",") if s.strip())
    return config.replace(**changes) if changes else config


def cmd_run(args) -> int:
    config = _load_config(args)
    rows = run_sweep(config, workers=args.workers, timing=args.timing)
    out = Path(args.out)
    raw, agg = emit_report(rows, out / "results.csv")
    print(f"wrote {len(rows)} rows to {raw} and aggregates to {agg}")
    return 0


def cmd_solve(args) -> int:
    config = _load_config(args)
    scenario = config.scenario
    seed = derive_seed(config.seed, config.sweep_values[0], 0) if args.scene_seed is None else args.scene_seed
    scene = build_scene(scenario, seed)
    codebook, window = scenario.codebook(), scenario.window
    state = solve(scene, codebook, window, config.solver)
    rate = sum_rate(scene, codebook, window, state.assignment, state.precoder)
    status = "converged" if state.converged else state.flag
    print(f"# seed={seed} iterations={state.iter} status={status} "
          f"sum_rate_bps={scene.bandwidth_hz * rate!r} beams={list(state.assignment.row_of)}",
          file=sys.stderr)
    if args.dump_trace:
        fh = open(args.trace_out, "w", newline="") if args.trace_out else sys.stdout
        try:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_HEADER)
            for rec in state.history:
                writer.writerow([rec.iteration, repr(rec.objective),
                                 repr(scene.bandwidth_hz * rec.sum_rate), repr(rec.beta),
                                 repr(rec.power), int(rec.assignment_accepted)])
        finally:
            if fh is not sys.stdout:
                fh.close()
    return 0


def read_cost_csv(path) -> np.ndarray:
    """Numeric CSV, rows = DFT indices, columns = users. A non-numeric first
    row is treated as a header."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"{path}: empty cost file")
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        rows = rows[1:]
    cost = np.array([[float(c) for c in r] for r in rows])
    if cost.ndim != 2:
        raise ValueError(f"{path}: rows have different lengths")
    return cost


def cmd_oracle(args) -> int:
    cost = read_cost_csv(args.cost)
    fast = hungarian(cost)
    exact = brute_force_assignment(cost)
    fast_total = assignment_total(cost, fast)
    exact_total = assignment_total(cost, exact)
    print(f"hungarian   rows={list(fast.row_of)} total={fast_total!r}")
    print(f"brute_force rows={list(exact.row_of)} total={exact_total!r}")
    match = fast_total == exact_total
    print(f"match={'yes' if match else 'no'}")
    return 0 if match else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="satbeam", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Monte Carlo sweep over all schemes")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", default="results")
    run.add_argument("--trials", type=int)
    run.add_argument("--schemes", help=f"comma-separated subset of {','.join(SCHEMES)}")
    run.add_argument("--workers", type=int, default=1, help="parallel trial processes")
    run.add_argument("--timing", action="store_true",
                     help="record wall_ms (makes the output machine dependent)")
    run.set_defaults(func=cmd_run)

    sol = sub.add_parser("solve", help="run the joint solver on a single scene")
    sol.add_argument("--config", required=True)
    sol.add_argument("--seed", type=int, help="base seed (scene seed is derived from it)")
    sol.add_argument("--scene-seed", type=int, help="use this scene seed directly")
    sol.add_argument("--dump-trace", action="store_true", help="per-iteration CSV")
    sol.add_argument("--trace-out", help="write the trace here instead of stdout")
    sol.set_defaults(func=cmd_solve)

    ora = sub.add_parser("oracle", help="cross-check Hungarian against enumeration")
    ora.add_argument("--cost", required=True, help="CSV cost matrix, rows = DFT indices")
    ora.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"satbeam: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
