"""Command line interface.

Subcommands:

* build-instance       dataset directory or synthetic shape -> instance JSON
* solve                instance JSON -> solution, report and trace files
* experiment           one of the four desk-scale studies -> report CSVs
* estimate-sensitivity dataset directory -> fitted sensitivity CSV

Every command writes a MANIFEST.json recording the seed, the full effective
configuration and its SHA-256 hash; repeating a command with the same
manifest inputs and iteration-bounded budgets reproduces the CSV outputs
byte for byte.  Exit codes: 0 success, 2 bad configuration or input, 3
runtime failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from . import data as data_mod
from .alphaexp import alpha_expansion
from .decomposers import DecomposeConfig, decompose_loop
from .experiments import (
    ExperimentSettings,
    composed_objective,
    fmt,
    run_decomposers,
    run_penalty_norm,
    run_score_norm,
    run_timeseries,
    write_csv,
)
from .model import decode_one_hot, encode_one_hot, evaluate_schedule
from .solvers import (
    Budget,
    SolveRequest,
    brute_force,
    simulated_annealing,
    tabu_search,
    write_trace_csv,
)

__all__ = ["main"]

SIZE_PRESETS = {
    # states counted as 1 off state plus production levels
    "S": {"T": 2, "k": 3, "promote_statics": False},
    "L": {"T": 8, "k": 5, "promote_statics": True},
}


class ConfigError(Exception):
    """Bad flags, config file or input data; maps to exit code 2."""


def _package_version() -> str:
    try:
        return metadata.version("redispatch")
    except metadata.PackageNotFoundError:  # running from a checkout
        return "0.0.0"


def _config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("ascii")).hexdigest()


def _write_manifest(out_dir: Path, command: str, config: dict) -> None:
    manifest = {
        "command": command,
        "config": config,
        "config_hash": _config_hash(config),
        "version": _package_version(),
    }
    with open(out_dir / "MANIFEST.json", "w", encoding="ascii") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _apply_config_file(args: argparse.Namespace) -> None:
    """Values from --config take precedence over command line flags."""
    if not getattr(args, "config", None):
        return
    path = Path(args.config)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        overrides = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: invalid JSON ({exc})") from exc
    if not isinstance(overrides, dict):
        raise ConfigError(f"config file {path}: expected a JSON object")
    for key, value in overrides.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ConfigError(f"config file {path}: unknown setting {key!r}")
        setattr(args, attr, value)


def _load_dataset(args) -> data_mod.NetworkDataset:
    if getattr(args, "data_dir", None):
        return data_mod.load_network(args.data_dir)
    raise ConfigError("a dataset directory is required (--data-dir)")


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_build_instance(args) -> int:
    if bool(args.data_dir) == bool(args.synthetic):
        raise ConfigError("pass exactly one of --data-dir or --synthetic n,k,T,L")
    preset = SIZE_PRESETS.get(args.size, {})
    T = args.T if args.T is not None else preset.get("T")
    k = args.k if args.k is not None else preset.get("k")
    if T is None or k is None:
        raise ConfigError("need --size S|L or explicit --T and --k")
    promote = (args.promote_statics if args.promote_statics is not None
               else preset.get("promote_statics", False))
    if args.synthetic:
        try:
            n, k_s, t_s, L = (int(v) for v in args.synthetic.split(","))
        except ValueError as exc:
            raise ConfigError(f"--synthetic wants n,k,T,L integers: {exc}") from exc
        inst, _ = data_mod.synth_instance(n, k_s, t_s, L, seed=args.seed)
    else:
        ds = data_mod.load_network(args.data_dir)
        inst = data_mod.build_instance(ds, T, k, seed=args.seed,
                                       promote_statics=promote)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    data_mod.save_instance(out, inst)
    config = {
        "data_dir": str(args.data_dir) if args.data_dir else None,
        "synthetic": args.synthetic, "size": args.size, "T": T, "k": k,
        "promote_statics": promote, "seed": args.seed, "out": str(out),
    }
    _write_manifest(out.parent, "build-instance", config)
    print(f"wrote instance: T={inst.T} n={inst.n} k={inst.k} L={inst.L} -> {out}")
    return 0


def cmd_solve(args) -> int:
    inst = data_mod.load_instance(args.instance)
    qubo = composed_objective(inst)
    x0 = encode_one_hot(np.ones((inst.T, inst.n), dtype=int),
                        inst.T, inst.n, inst.k)
    time_limit = args.time_limit if args.time_limit else math.inf
    if args.solver == "alpha":
        result = alpha_expansion(
            inst, qubo, x0, batch_size=args.batch_size,
            budget=Budget(max_iterations=args.max_iterations,
                          time_limit=time_limit),
            seed=args.seed,
        )
    elif args.solver in ("random-decomp", "score-decomp"):
        result = decompose_loop(qubo, x0, DecomposeConfig(
            subproblem_size=args.subproblem_size,
            strategy=args.solver.split("-")[0],
            max_steps=args.max_iterations,
            time_limit=time_limit,
            seed=args.seed,
        ))
    else:
        req = SolveRequest(
            qubo=qubo, initial=x0, seed=args.seed,
            budget=Budget(max_iterations=args.max_iterations,
                          time_limit=time_limit),
            keep_trace=True,
        )
        if args.solver == "tabu":
            result = tabu_search(req)
        elif args.solver == "sa":
            result = simulated_annealing(req)
        else:
            result = brute_force(req)
    out = _out_dir(args)
    try:
        Z = decode_one_hot(result.best, inst.T, inst.n, inst.k)
        feasible = True
    except ValueError:
        from .experiments import project_feasible
        Z = project_feasible(inst, result.best)
        feasible = False
    report = evaluate_schedule(inst, Z)
    solution = {
        "schedule": Z.tolist(),
        "objective": result.score,
        "iterations": result.iterations,
        "feasible": feasible,
        "overloaded_lines": report.overloaded_lines,
        "production_cost": report.production_cost,
        "switching_cost": report.switching_cost,
        "fulfilled_timepoints": report.fulfilled_timepoints,
        "switches": report.switches,
    }
    with open(out / "solution.json", "w", encoding="ascii") as fh:
        json.dump(solution, fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(out / "timing.json", "w", encoding="ascii") as fh:
        json.dump({"wall_seconds": result.wall_seconds}, fh)
        fh.write("\n")
    if result.trace:
        write_trace_csv(out / "trace.csv", result.trace)
    report_rows = [[
        args.solver, args.seed, result.iterations, result.score,
        report.overloaded_lines, report.production_cost,
        report.fulfilled_timepoints, report.switches, int(feasible),
    ]]
    write_csv(out / "report.csv",
              ["solver", "seed", "iterations", "objective",
               "overloaded_lines", "production_cost", "fulfilled_timepoints",
               "switches", "feasible"], report_rows)
    config = {
        "instance": str(args.instance), "solver": args.solver,
        "seed": args.seed, "max_iterations": args.max_iterations,
        "time_limit": args.time_limit, "batch_size": args.batch_size,
        "subproblem_size": args.subproblem_size,
    }
    _write_manifest(out, "solve", config)
    print(f"{args.solver}: objective {fmt(result.score)}, "
          f"feasible={feasible}, -> {out}")
    return 0


def cmd_experiment(args) -> int:
    ds = _load_dataset(args)
    out = _out_dir(args)
    seeds = tuple(int(s) for s in args.seeds.split(",")) if args.seeds else tuple(range(10))
    preset = SIZE_PRESETS.get(args.size, SIZE_PRESETS["S"])
    settings = ExperimentSettings(
        T=args.T if args.T is not None else preset["T"],
        k=args.k if args.k is not None else preset["k"],
        seeds=seeds,
        tabu_iterations=args.max_iterations,
        time_limit=args.time_limit if args.time_limit else 60.0,
        max_steps=args.max_steps,
        promote_statics=(args.promote_statics
                         if args.promote_statics is not None
                         else preset["promote_statics"]),
    )
    runner = {
        "penalty-norm": run_penalty_norm,
        "score-norm": run_score_norm,
        "decomposers": run_decomposers,
        "timeseries": run_timeseries,
    }[args.which]
    summary = runner(ds, settings, out)
    config = {
        "which": args.which, "data_dir": str(args.data_dir),
        "size": args.size, "T": settings.T, "k": settings.k,
        "seeds": list(settings.seeds),
        "max_iterations": settings.tabu_iterations,
        "time_limit": settings.time_limit, "max_steps": settings.max_steps,
        "promote_statics": settings.promote_statics,
    }
    _write_manifest(out, f"experiment {args.which}", config)
    print(json.dumps({"experiment": args.which, "summary": summary},
                     sort_keys=True, default=float))
    return 0


def cmd_estimate_sensitivity(args) -> int:
    ds = _load_dataset(args)
    out = _out_dir(args)
    phi = np.hstack([ds.controllable_profiles, ds.fixed_profiles])
    cfg = data_mod.SensitivityFitConfig(
        step=args.step, max_iterations=args.max_iterations)
    fit = data_mod.estimate_sensitivity(phi, ds.flows, cfg)
    source_ids = [c.id for c in ds.controllables] + list(ds.fixed_ids)
    rows = []
    for i, ident in enumerate(source_ids):
        for l, line in enumerate(ds.lines):
            rows.append([ident, line.id, fit.S[i, l]])
    with open(out / "sensitivity.csv", "w", encoding="ascii") as fh:
        fh.write("source_id,line_id,sensitivity\n")
        for ident, line_id, v in rows:
            fh.write(f"{ident},{line_id},{fmt(v)}\n")
    write_csv(out / "fit_loss.csv", ["iteration", "loss"],
              [[i, v] for i, v in enumerate(fit.loss_trace)])
    config = {
        "data_dir": str(args.data_dir), "step": args.step,
        "max_iterations": args.max_iterations,
    }
    _write_manifest(out, "estimate-sensitivity", config)
    print(f"fit loss {fmt(fit.loss_trace[-1])} after {fit.iterations} "
          f"iterations (converged={fit.converged}) -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="redispatch",
        description="QUBO re-dispatch toolkit: build instances, solve, reproduce studies",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", help="JSON file whose values override flags")

    p = sub.add_parser("build-instance", help="derive an instance file")
    common(p)
    p.add_argument("--data-dir", help="dataset directory of CSV files")
    p.add_argument("--synthetic", help="n,k,T,L for a planted synthetic instance")
    p.add_argument("--size", choices=list(SIZE_PRESETS), default=None)
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--promote-statics", type=int, choices=(0, 1), default=None)
    p.add_argument("--out", default="instance.json")
    p.set_defaults(func=cmd_build_instance)

    p = sub.add_parser("solve", help="minimize the composite objective")
    common(p)
    p.add_argument("--instance", required=True)
    p.add_argument("--solver", default="alpha",
                   choices=["alpha", "tabu", "sa", "brute",
                            "random-decomp", "score-decomp"])
    p.add_argument("--max-iterations", type=int, default=10000)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=12)
    p.add_argument("--subproblem-size", type=int, default=40)
    p.add_argument("--out-dir", default="solve-out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("experiment", help="run one desk-scale study")
    common(p)
    p.add_argument("which", choices=["penalty-norm", "score-norm",
                                     "decomposers", "timeseries"])
    p.add_argument("--data-dir", required=True)
    p.add_argument("--size", choices=list(SIZE_PRESETS), default="S")
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--seeds", help="comma separated seed list, default 0..9")
    p.add_argument("--max-iterations", type=int, default=4000)
    p.add_argument("--max-steps", type=int, default=60)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--promote-statics", type=int, choices=(0, 1), default=None)
    p.add_argument("--out-dir", default="experiment-out")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("estimate-sensitivity", help="fit line sensitivities")
    common(p)
    p.add_argument("--data-dir", required=True)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--max-iterations", type=int, default=20000)
    p.add_argument("--out-dir", default="sensitivity-out")
    p.set_defaults(func=cmd_estimate_sensitivity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args)
        return args.func(args)
    except (ConfigError, data_mod.ParseError, data_mod.SchemaError,
            data_mod.BadLevelsError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
