"""Command-line entry point.

Exit codes: 0 success, 1 a required condition failed or the inputs are
incompatible, 2 the scenario or design file could not be read (argparse
usage errors also exit 2).  Failures print a JSON body on stderr with
keys ``error``, ``message`` and ``failures``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from dataclasses import replace
from pathlib import Path

from . import bench, sim, solve
from .errors import ConditionFailed, ConfigError, Failure, MorpError, NotApplicable
from .graph import has_spanning_tree, h_matrix
from .partition import PartitionSchedule
from .plant import exosystem_antistable, validate
from .scenario import (BUILTINS, ScenarioError, builtin_path, design_compatible, design_from_dict,
                       design_to_dict, load_scenario)
from .synth import (LEADER_ANTISTABLE, MATCHED, REGULATOR, REGULATOR_INDEPENDENT, SPANNING_TREE,
                    STABILIZABLE, Strategy, design)

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2
TRANSMISSION_ZEROS = "transmission_zeros"
MATCHED_RANK = "matched_disturbance_rank"


class _Exit(Exception):
    def __init__(self, code: int, error: str, message: str, failures=()):
        super().__init__(message)
        self.code = code
        self.body = {"error": error, "message": message,
                     "failures": [f.as_dict() if isinstance(f, Failure) else f for f in failures]}


def _load(args):
    try:
        sc = load_scenario(args.scenario)
    except ScenarioError as exc:
        raise _Exit(EXIT_INPUT, "scenario", str(exc)) from exc
    problems = validate(sc.model)
    if problems:
        raise _Exit(EXIT_INPUT, "scenario", "; ".join(problems))
    if getattr(args, "strategy", None):
        sc.strategy = Strategy(args.strategy)
    if getattr(args, "mu_min", None) is not None:
        sc.options = replace(sc.options, mu_min=args.mu_min)
    return sc


def _write_json(obj, path):
    text = json.dumps(obj, indent=2)
    if path in (None, "-"):
        print(text)
    else:
        Path(path).write_text(text + "\n", encoding="utf-8")


# -- check -------------------------------------------------------------------

def check_scenario(sc, strategy: Strategy) -> dict:
    """Evaluate every solvability condition; see README for which are required."""
    model, exo = sc.model, sc.model.exosystem
    terms_by_follower = [sorted({p[i] for _, p in sc.schedule.segments}) for i in range(model.n_followers)]
    conds: dict[str, list[int]] = {k: [] for k in
                                   (STABILIZABLE, REGULATOR, REGULATOR_INDEPENDENT, MATCHED,
                                    MATCHED_RANK, TRANSMISSION_ZEROS)}
    detail: dict[str, list[str]] = {k: [] for k in conds}
    for i, fm in enumerate(model.followers):
        if not solve.is_stabilizable(fm.a, fm.b):
            conds[STABILIZABLE].append(i)
        for s in terms_by_follower[i]:
            try:
                solve.solve_regulator(fm, exo, s)
            except MorpError as exc:
                conds[REGULATOR].append(i)
                detail[REGULATOR].append(f"follower {i}, s={s!r}: {exc}")
                break
        try:
            solve.solve_regulator(fm, exo, 1.0)
        except MorpError as exc:
            conds[REGULATOR_INDEPENDENT].append(i)
            detail[REGULATOR_INDEPENDENT].append(f"follower {i}: {exc}")
        lme = solve.solve_lme(fm)
        if not lme.feasible:
            conds[MATCHED].append(i)
            detail[MATCHED].append(f"follower {i}: residual {lme.residual:.3e}")
        if not solve.lme_rank_feasible(fm):
            conds[MATCHED_RANK].append(i)
        if not solve.transmission_zeros_ok(fm, exo):
            conds[TRANSMISSION_ZEROS].append(i)

    required = {STABILIZABLE, SPANNING_TREE}
    required |= {REGULATOR} if strategy is Strategy.PARTITION_DEPENDENT else {REGULATOR_INDEPENDENT, MATCHED}
    rows = [{"condition": LEADER_ANTISTABLE, "ok": exosystem_antistable(exo), "required": False,
             "followers": []},
            {"condition": SPANNING_TREE, "ok": has_spanning_tree(model.graph), "required": True,
             "followers": []}]
    for name, bad in conds.items():
        rows.append({"condition": name, "ok": not bad, "required": name in required,
                     "followers": bad, "detail": detail[name]})
    ok = all(r["ok"] for r in rows if r["required"])
    report = {"scenario": sc.name, "strategy": strategy.value, "ok": ok, "conditions": rows}
    if rows[1]["ok"]:
        report["mu_bound"] = solve.mu_lower_bound(exo, h_matrix(model.graph))
    return report


def cmd_check(args) -> int:
    sc = _load(args)
    report = check_scenario(sc, sc.strategy)
    if args.json:
        _write_json(report, "-")
    else:
        print(f"scenario {sc.name}  strategy {sc.strategy.value}")
        for r in report["conditions"]:
            status = "pass" if r["ok"] else "FAIL"
            tag = "required" if r["required"] else "info"
            who = f"  followers {r['followers']}" if r["followers"] else ""
            print(f"  {status:4s}  {r['condition']:<26s} ({tag}){who}")
        print("ok" if report["ok"] else "required conditions failed")
    return EXIT_OK if report["ok"] else EXIT_FAILED


# -- design ------------------------------------------------------------------

def _design(sc):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return design(sc.model, sc.schedule.segments[0][1], sc.strategy, sc.options)
    except ConditionFailed as exc:
        raise _Exit(EXIT_FAILED, "condition_failed", str(exc), exc.failures) from exc
    except MorpError as exc:
        raise _Exit(EXIT_FAILED, type(exc).__name__, str(exc)) from exc


def cmd_design(args) -> int:
    sc = _load(args)
    d = _design(sc)
    _write_json(design_to_dict(d), args.out)
    return EXIT_OK


# -- sim ---------------------------------------------------------------------

def cmd_sim(args) -> int:
    sc = _load(args)
    if args.dt is not None or args.horizon is not None:
        try:
            if args.dt is not None:
                sc.sim = replace(sc.sim, dt=args.dt)
            if args.horizon is not None:
                sc.sim = replace(sc.sim, horizon=args.horizon)
                segs = tuple(seg for seg in sc.schedule.segments if seg[0] < args.horizon)
                sc.schedule = PartitionSchedule(segs, args.horizon)
        except ValueError as exc:
            raise _Exit(EXIT_INPUT, "config", str(exc)) from exc
    if args.design:
        try:
            d = design_from_dict(json.loads(Path(args.design).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError, ScenarioError) as exc:
            raise _Exit(EXIT_INPUT, "design", str(exc)) from exc
        problems = design_compatible(d, sc.model)
        if problems:
            raise _Exit(EXIT_FAILED, "incompatible_design", "; ".join(problems))
    else:
        d = _design(sc)
    try:
        result = sim.simulate(sc.model, d, sc.schedule, sc.sim)
    except ConfigError as exc:
        raise _Exit(EXIT_INPUT, "config", str(exc)) from exc
    except ConditionFailed as exc:
        raise _Exit(EXIT_FAILED, "condition_failed", str(exc), exc.failures) from exc
    if args.csv:
        sim.write_csv(result, args.csv)
    _write_json(sim.summary(result), args.summary)
    return EXIT_OK


# -- bench -------------------------------------------------------------------

def resolve_seed(cli_seed: int | None, scenario_seed: int | None) -> int:
    """Seed precedence: command line, then ``MORP_SEED``, then the scenario, then the default."""
    if cli_seed is not None:
        return cli_seed
    env = os.environ.get("MORP_SEED")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise _Exit(EXIT_INPUT, "config", f"MORP_SEED must be an integer, got {env!r}") from exc
    if scenario_seed is not None:
        return int(scenario_seed)
    return bench.DEFAULT_SEED


def cmd_bench(args) -> int:
    sc = _load(args)
    cfg = sc.bench
    count = args.terms if args.terms is not None else int(cfg.get("terms", 1000))
    reps = args.reps if args.reps is not None else int(cfg.get("reps", 5))
    if count < 0 or reps < 1:
        raise _Exit(EXIT_INPUT, "config", "--terms must be >= 0 and --reps >= 1")
    if not 0 <= args.follower < sc.model.n_followers:
        raise _Exit(EXIT_INPUT, "config", f"no follower {args.follower}")
    seed = resolve_seed(args.seed, cfg.get("seed"))
    terms = bench.random_terms(count, seed)
    try:
        report = bench.run_benchmark(sc.model.followers[args.follower], sc.model.exosystem,
                                     terms, repetitions=reps, seed=seed)
    except NotApplicable as exc:
        raise _Exit(EXIT_FAILED, "not_applicable", str(exc)) from exc
    if args.csv:
        bench.write_csv(report, args.csv)
    _write_json(report.as_dict(), args.summary)
    return EXIT_OK


# -- builtins ----------------------------------------------------------------

def cmd_list(args) -> int:
    for name in BUILTINS:
        print(name)
    return EXIT_OK


def cmd_export(args) -> int:
    try:
        text = builtin_path(args.name).read_text(encoding="utf-8")
    except ScenarioError as exc:
        raise _Exit(EXIT_INPUT, "scenario", str(exc)) from exc
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="morp", description="Multi-partite output regulation toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    def scenario_cmd(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("scenario", help="scenario JSON file or built-in name")
        p.add_argument("--strategy", choices=[s.value for s in Strategy],
                       help="override the scenario's design strategy")
        p.set_defaults(func=fn)
        return p

    p = scenario_cmd("check", cmd_check, "report solvability conditions")
    p.add_argument("--json", action="store_true", help="print the report as JSON")

    p = scenario_cmd("design", cmd_design, "synthesize controller gains")
    p.add_argument("--mu-min", type=float, help="lower limit on the observer coupling")
    p.add_argument("--out", help="design report path (default stdout)")

    p = scenario_cmd("sim", cmd_sim, "simulate the closed loop over the schedule")
    p.add_argument("--mu-min", type=float)
    p.add_argument("--design", help="design report from 'morp design'")
    p.add_argument("--csv", help="trajectory CSV path")
    p.add_argument("--summary", help="summary JSON path (default stdout)")
    p.add_argument("--dt", type=float)
    p.add_argument("--horizon", type=float)

    p = scenario_cmd("bench", cmd_bench, "time both strategies over random partition terms")
    p.add_argument("--terms", type=int, help="number of terms M")
    p.add_argument("--reps", type=int, help="repetitions (median is reported)")
    p.add_argument("--seed", type=int)
    p.add_argument("--follower", type=int, default=0, help="zero-based follower index")
    p.add_argument("--csv", help="timing CSV path")
    p.add_argument("--summary", help="summary JSON path (default stdout)")

    p = sub.add_parser("list", help="list built-in scenarios")
    p.set_defaults(func=cmd_list)
    p = sub.add_parser("export", help="write a built-in scenario file")
    p.add_argument("name", choices=BUILTINS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Exit as exc:
        print(json.dumps(exc.body), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
