"""Command-line entry points.

Subcommands
-----------
guess             emit the analytical shooting seed and the closed-loop
                  guidance trace toward the stage-1 target
solve-simplified  solve the reduced arc-length problem only
solve             run the full three-stage pipeline
validate          re-derive invariants from an emitted trajectory CSV
sweep-m0          solve scenarios across a grid of initial masses

Artifacts are delimited text (CSV with a header row, '.' decimal, no
locale) plus JSON run reports.  Exit codes: 0 success, 2 scenario or
input validation error, 3 solver failure.  Failures are also written to
stderr as a one-line JSON record.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .continuation import (ContinuationOpts, coast_endpoint, default_tf_guess,
                           resolve_opts, solve, step_one, sweep_m0)
from .errors import AscentError, ScenarioError
from .full_ocp import full_hamiltonian
from .guidance import closed_loop_trace
from .scenario import load_scenario
from .shooting import integrate_simplified_extremal
from .trajectory import Trajectory
from .vehicle import VehicleParams


def _fail(kind: str, exc: Exception, code: int) -> int:
    record = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    print(json.dumps(record), file=sys.stderr)
    return code


def _scenario_and_opts(args):
    scenario = load_scenario(args.scenario)
    overrides = {}
    if getattr(args, "steps", None):
        overrides["n_steps"] = args.steps
    opts = resolve_opts(scenario, **overrides)
    vehicle_overrides = {}
    if getattr(args, "m0", None):
        vehicle_overrides["m0"] = args.m0
    if getattr(args, "shortcut", False):
        import dataclasses
        scenario = dataclasses.replace(scenario, shortcut_target=True)
    p = scenario.params(**vehicle_overrides)
    return scenario, p, opts


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def cmd_guess(args) -> int:
    scenario, p, opts = _scenario_and_opts(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if scenario.shortcut_target:
        target = scenario.yf_array()
    else:
        target = coast_endpoint(scenario, p,
                                scenario.tf_guess or default_tf_guess(scenario, p),
                                opts.n_steps)
    from .guidance import assemble_guess
    guess = assemble_guess(scenario.y0_array(), scenario.v0, target, p)
    trace = closed_loop_trace(scenario.y0_array(), scenario.v0, target, p)

    trace_path = out / "guidance_trace.csv"
    with open(trace_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s", "r", "L", "l", "gamma", "chi", "u1", "u2", "range_m"])
        k = len(trace["u1"])
        for i in range(k):
            row = [trace["s"][i], *trace["states"][i],
                   trace["u1"][i], trace["u2"][i], trace["range"][i]]
            writer.writerow([repr(float(v)) for v in row])

    payload = {
        "scenario": scenario.name,
        "target": list(map(float, target)),
        "s_f_guess_m": guess.s_f,
        "costate0": list(map(float, guess.costate0)),
        "diagnostics": {k: (list(v) if isinstance(v, tuple) else v)
                        for k, v in guess.diagnostics.items()},
        "closed_loop": {
            "initial_range_m": trace["initial_range"],
            "final_range_m": trace["final_range"],
            "range_fraction": trace["range_fraction"],
            "gamma_error_rad": trace["gamma_error"],
            "chi_error_rad": trace["chi_error"],
        },
        "trace_csv": str(trace_path),
    }
    _write_json(out / "guess.json", payload)
    print(json.dumps(payload["closed_loop"]))
    return 0


def cmd_solve_simplified(args) -> int:
    scenario, p, opts = _scenario_and_opts(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    hs, extras = step_one(scenario, p, opts)
    simp = extras["simplified_solution"]
    traj = integrate_simplified_extremal(scenario.y0_array(), simp.x[:5],
                                         float(simp.x[5]), p, opts.n_steps)
    traj.to_csv(out / "trajectory_simplified.csv")
    payload = {
        "scenario": scenario.name,
        "s_f_m": float(simp.x[5]),
        "costate0": [float(v) for v in simp.x[:5]],
        "newton_iterations": simp.iterations,
        "residual_norm": simp.norm,
        "guess_residual": extras["guess_residual"],
        "target": list(map(float, hs.target_base)),
    }
    _write_json(out / "report_simplified.json", payload)
    print(json.dumps({"s_f_m": payload["s_f_m"],
                      "newton_iterations": simp.iterations,
                      "residual_norm": simp.norm}))
    return 0


def cmd_solve(args) -> int:
    scenario, p, opts = _scenario_and_opts(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    solution = solve(scenario, p, opts)
    solution.trajectory.to_csv(out / "trajectory.csv")
    report = solution.report()
    report_path = Path(args.report) if args.report else out / "report.json"
    _write_json(report_path, report)
    print(json.dumps({
        "scenario": scenario.name,
        "v_tf_mps": solution.v_tf,
        "t_f_s": solution.t_f,
        "lam1_solves": report["lam1_solves"],
        "lam2_solves": report["lam2_solves"],
        "residual_norm": solution.residual_norm,
        "wall_s": solution.wall_s,
    }))
    return 0


def cmd_validate(args) -> int:
    traj = Trajectory.from_csv(args.trajectory)
    params = {}
    lam1 = 1.0
    if args.report:
        with open(args.report) as fh:
            report = json.load(fh)
        if report.get("m0_kg"):
            params["m0"] = float(report["m0_kg"])
    if args.m0:
        params["m0"] = args.m0
    p = VehicleParams(**params) if params else VehicleParams()

    if traj.kind != "full":
        raise ScenarioError("validate expects a time-domain trajectory CSV")
    n = traj.grid.size
    h_err = 0.0
    for i in range(n):
        h = full_hamiltonian(traj.grid[i], traj.states[i], traj.costates[i],
                             (traj.u[i], traj.beta[i]), lam1, p)
        h_err = max(h_err, abs(h - traj.hamiltonian[i]))
    verdict = {
        "rows": int(n),
        "hamiltonian_recompute_max_abs_err": h_err,
        "hamiltonian_ok": bool(h_err <= 1e-10 * max(1.0, float(np.max(np.abs(traj.hamiltonian))))),
        "grid_monotone": bool(np.all(np.diff(traj.grid) > 0)),
        "u_min": float(traj.u.min()),
        "u_max": float(traj.u.max()),
        "u_in_unit_interval": bool(traj.u.min() >= -1.0 and traj.u.max() <= 1.0),
        "p_w_terminal": float(traj.costates[-1, 3]),
        "hamiltonian_terminal": float(traj.hamiltonian[-1]),
    }
    print(json.dumps(verdict, indent=2))
    ok = verdict["hamiltonian_ok"] and verdict["grid_monotone"]
    return 0 if ok else 3


def cmd_sweep_m0(args) -> int:
    names = [s.strip() for s in args.scenarios.split(",") if s.strip()]
    if args.m0_values:
        values = [float(v) for v in args.m0_values.split(",")]
    else:
        lo, hi, count = args.m0_grid
        values = list(np.linspace(lo, hi, int(count)))
    rows = sweep_m0(names, values)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "sweep_m0.json", rows)
    table = out / "sweep_m0.csv"
    with open(table, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m0_kg"] + [f"{n}_{c}" for n in names
                                     for c in ("v_tf_mps", "t_f_s")])
        for row in rows:
            line = [row["m0_kg"]]
            for n in names:
                rec = row["scenarios"][n]
                line += [rec.get("v_tf_mps", math.nan), rec.get("t_f_s", math.nan)]
            writer.writerow([repr(float(v)) for v in line])
    print(json.dumps({"m0_values": values, "table": str(table)}))
    return 0


def _grid_triplet(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected lo:hi:count")
    return float(parts[0]), float(parts[1]), int(parts[2])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ascent-opt",
        description="Indirect-shooting trajectory optimizer for powered ascent")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, scenario_positional=True):
        if scenario_positional:
            sp.add_argument("scenario", nargs="?", default=None,
                            help="bundled name (S1/S2/S3) or scenario file")
        sp.add_argument("--scenario", dest="scenario_flag", default=None,
                        help="bundled name or path (alternative to positional)")
        sp.add_argument("--out", default="out", help="artifact directory")
        sp.add_argument("--m0", type=float, default=None,
                        help="initial mass override [kg]")
        sp.add_argument("--steps", type=int, default=None,
                        help="integration steps per shot")

    sp = sub.add_parser("guess", help="analytical seed + guidance trace")
    common(sp)
    sp.set_defaults(fn=cmd_guess)

    sp = sub.add_parser("solve-simplified", help="stage-1 reduced solve only")
    common(sp)
    sp.set_defaults(fn=cmd_solve_simplified)

    sp = sub.add_parser("solve", help="full continuation pipeline")
    common(sp)
    sp.add_argument("--shortcut", action="store_true",
                    help="aim stage 1 at the requested target directly")
    sp.add_argument("--report", default=None, help="run report path")
    sp.set_defaults(fn=cmd_solve)

    sp = sub.add_parser("validate", help="re-check invariants of a trajectory CSV")
    sp.add_argument("trajectory", help="trajectory CSV emitted by solve")
    sp.add_argument("--report", default=None, help="run report for parameters")
    sp.add_argument("--m0", type=float, default=None)
    sp.set_defaults(fn=cmd_validate)

    sp = sub.add_parser("sweep-m0", help="tabulate (v_tf, t_f) across masses")
    sp.add_argument("--scenarios", default="S1,S2,S3",
                    help="comma-separated names or paths")
    sp.add_argument("--m0-grid", type=_grid_triplet, default=(500.0, 5000.0, 10),
                    help="lo:hi:count mass grid [kg]")
    sp.add_argument("--m0-values", default=None,
                    help="explicit comma-separated masses [kg]")
    sp.add_argument("--out", default="out")
    sp.set_defaults(fn=cmd_sweep_m0)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "scenario_flag") and args.scenario_flag:
        args.scenario = args.scenario_flag
    if getattr(args, "scenario", "unused") is None:
        parser.error("a scenario name or path is required")
    try:
        return args.fn(args)
    except ScenarioError as exc:
        return _fail("scenario", exc, 2)
    except AscentError as exc:
        return _fail("solver", exc, 3)
    except OSError as exc:
        return _fail("io", exc, 2)


if __name__ == "__main__":
    sys.exit(main())
