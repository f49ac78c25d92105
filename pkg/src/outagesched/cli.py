"""Command-line surface: solve, validate, generate, encode-sat, stats.

Exit codes: 0 success/feasible, 1 I/O or usage error, 2 infeasible
solution, 3 scheduler failure.  Every flag can also be set through an
OUTAGESCHED_* environment variable (flag name upper-cased, dashes to
underscores), which takes effect when the flag is not given.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import evaluator, instance_io, modulation, satgen, scheduler, search
from .model import Instance, ModelError, Schedule
from .planner import build_pwl

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_SCHEDULER = 3

_ENV_PREFIX = "OUTAGESCHED_"


def _env(name: str, default):
    raw = os.environ.get(_ENV_PREFIX + name.upper().replace("-", "_"))
    if raw is None:
        return default
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes")
    if default is None:
        return raw
    return type(default)(raw)


def _env_int(name: str) -> Optional[int]:
    raw = os.environ.get(_ENV_PREFIX + name.upper().replace("-", "_"))
    return int(raw) if raw else None


@dataclass
class PipelineOutcome:
    exit_code: int
    schedule: Optional[Schedule]
    productions: Optional[list]
    objective: Optional[float]
    violations: list
    timings: dict
    stats: dict


def run_pipeline(
    instance: Instance,
    time_budget: float = 60.0,
    seed: int = 0,
    sa_params: Optional[search.SaParams] = None,
    refuel_quantum: float = 1000.0,
    breakpoints: Optional[int] = None,
    cp_fraction: float = 1.0 / 6.0,
    cp_max_nodes: Optional[int] = None,
    sa_max_iters: Optional[int] = None,
    verbose: bool = False,
    diag=sys.stderr,
) -> PipelineOutcome:
    """Scheduler -> production planner -> annealing -> modulation.

    The scheduler gets cp_fraction of the time budget (it keeps running
    until a first feasible schedule if that slice expires empty-handed);
    the rest goes to the annealing chain.  Iteration budgets, when given,
    take precedence and make the run reproducible."""
    timings = {}
    stats = {}
    ss = np.random.SeedSequence(seed)
    seed_cp, seed_sa = (int(s.generate_state(1)[0]) for s in ss.spawn(2))

    def note(msg):
        if verbose:
            print(msg, file=diag)

    t0 = time.monotonic()
    cfg = scheduler.SearchConfig(
        refuel_quantum=refuel_quantum,
        time_budget=max(time_budget * cp_fraction, 0.1),
        rng_seed=seed_cp,
        bnb=True,
        max_nodes=cp_max_nodes,
    )
    sres = scheduler.solve_schedule(instance, cfg)
    timings["cp"] = time.monotonic() - t0
    stats["cp_nodes"] = sres.nodes
    stats["cp_status"] = sres.status
    if sres.status != scheduler.STATUS_FEASIBLE:
        note(f"scheduler: {sres.status} after {sres.nodes} nodes")
        return PipelineOutcome(EXIT_SCHEDULER, None, None, None, [], timings, stats)
    note(f"scheduler: surrogate {sres.surrogate:.6g} after {sres.nodes} nodes")

    t1 = time.monotonic()
    pwl = build_pwl(instance, breakpoints)
    state = search.SearchState.build(instance, pwl, sres.schedule)
    timings["planning"] = time.monotonic() - t1
    if state is None:
        note("planner: no feasible production plan for the schedule")
        return PipelineOutcome(EXIT_SCHEDULER, None, None, None, [], timings, stats)
    note(f"planner: initial cost estimate {state.cost:.6g}")
    stats["initial_cost_estimate"] = state.cost

    t2 = time.monotonic()
    params = sa_params or search.SaParams()
    remaining = max(time_budget - (time.monotonic() - t0), 0.5)
    params = search.SaParams(
        cooling_ratio=params.cooling_ratio,
        start_accept_ratio=params.start_accept_ratio,
        stop_idle=params.stop_idle,
        n_plateau=params.n_plateau,
        k_restart=params.k_restart,
        m_idle=params.m_idle,
        move_radius=params.move_radius,
        rng_seed=seed_sa,
        max_iters=sa_max_iters if sa_max_iters is not None else params.max_iters,
        time_budget=remaining if sa_max_iters is None else params.time_budget,
    )
    best, sa_stats = search.anneal(state, params, log=note if verbose else None)
    timings["delta_evaluation"] = time.monotonic() - t2
    stats["sa_iterations"] = sa_stats.iterations
    stats["sa_accepted"] = sa_stats.accepted
    stats["sa_restarts"] = sa_stats.restarts
    note(f"annealing: {sa_stats.iterations} iterations, best estimate {best.cost:.6g}")

    t3 = time.monotonic()
    modres = modulation.modulate_min_scenario(
        instance, best.schedule, best.results, refuel_quantum=refuel_quantum
    )
    if not modres.feasible:
        note("modulation: could not eliminate overproduction on the floor scenario")
    productions, per_ok = modulation.build_scenario_productions(
        instance, modres.schedule, modres.results
    )
    timings["modulation"] = time.monotonic() - t3
    if not per_ok:
        note("modulation: at least one scenario kept overproduction or unmet demand")

    objective = evaluator.compute_objective(instance, modres.schedule, productions)
    violations = evaluator.check_feasibility(instance, modres.schedule, productions)
    stats["objective"] = objective
    stats["violations"] = len(violations)
    note(f"objective {objective:.6g} with {len(violations)} violations")

    code = EXIT_OK if not violations else EXIT_INFEASIBLE
    return PipelineOutcome(code, modres.schedule, productions, objective, violations, timings, stats)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_solve(args) -> int:
    try:
        instance = instance_io.parse_instance(_read(args.instance))
    except (OSError, instance_io.ParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR

    t_io = time.monotonic()
    outcome = run_pipeline(
        instance,
        time_budget=args.time_budget,
        seed=args.seed,
        sa_params=search.SaParams(
            cooling_ratio=args.sa_cooling_ratio,
            start_accept_ratio=args.sa_start_accept_ratio,
            stop_idle=args.sa_stop_idle,
            n_plateau=args.sa_n_plateau,
            k_restart=args.sa_k_restart,
            m_idle=args.sa_m_idle,
            move_radius=args.sa_move_radius,
        ),
        refuel_quantum=args.refuel_quantum,
        breakpoints=args.breakpoints,
        cp_fraction=args.cp_fraction,
        cp_max_nodes=args.cp_max_nodes,
        sa_max_iters=args.sa_max_iters,
        verbose=args.verbose,
    )
    if outcome.exit_code == EXIT_SCHEDULER:
        print("solve: no feasible maintenance schedule found", file=sys.stderr)
        return EXIT_SCHEDULER

    text = instance_io.write_solution(
        instance, outcome.schedule, outcome.productions, outcome.objective
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    outcome.timings["io"] = time.monotonic() - t_io - sum(outcome.timings.values())

    summary = {
        "objective": outcome.objective,
        "violations": len(outcome.violations),
        "timings": {k: round(v, 3) for k, v in outcome.timings.items()},
    }
    print(json.dumps(summary), file=sys.stderr)
    return outcome.exit_code


def _cmd_validate(args) -> int:
    try:
        instance = instance_io.parse_instance(_read(args.instance))
        schedule, productions, claimed = instance_io.parse_solution(instance, _read(args.solution))
    except (OSError, instance_io.ParseError, ModelError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    try:
        violations = evaluator.check_feasibility(instance, schedule, productions)
        objective = evaluator.compute_objective(instance, schedule, productions)
    except (ModelError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    report = evaluator.violations_to_report(violations)
    report["objective"] = objective
    report["claimed_objective"] = claimed
    sys.stdout.write(json.dumps(report, indent=1) + "\n")
    return EXIT_OK if not violations else EXIT_INFEASIBLE


def _cmd_generate(args) -> int:
    try:
        params = instance_io.GeneratorParams(
            I=args.plants,
            J=args.type1,
            K=args.cycles,
            H=args.weeks,
            steps_per_week=args.steps_per_week,
            S=args.scenarios,
            demand_profile=(args.demand_base, args.demand_amplitude, args.demand_noise),
            constraint_density=args.density,
            seed=args.seed,
        )
        instance, witness = instance_io.generate_instance(params)
    except instance_io.GenerationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    text = instance_io.write_instance(instance)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    if args.witness:
        productions = instance_io.witness_productions(instance, witness)
        objective = evaluator.compute_objective(instance, witness, productions)
        with open(args.witness, "w", encoding="utf-8") as f:
            f.write(instance_io.write_solution(instance, witness, productions, objective))
    return EXIT_OK


def _cmd_encode_sat(args) -> int:
    try:
        text = _read(args.formula)
        formula = satgen.parse_clauses(text if isinstance(text, str) else text.decode())
        instance = satgen.encode_1in3sat(formula)
    except (OSError, ModelError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    out = instance_io.write_instance(instance)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(out)
    else:
        sys.stdout.write(out)
    return EXIT_OK


def _cmd_stats(args) -> int:
    try:
        instance = instance_io.parse_instance(_read(args.instance))
    except (OSError, instance_io.ParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    cpl = instance.coupling
    doc = {
        "T": instance.grid.T,
        "H": instance.grid.H,
        "D": instance.grid.D,
        "S": instance.scenarios.S,
        "type1_plants": instance.J,
        "type2_plants": instance.I,
        "cycles": [p.K for p in instance.type2],
        "separations": len(cpl.separations),
        "max_offline": len(cpl.max_offline),
        "resources": len(cpl.resources),
        "offline_capacity": len(cpl.offline_capacity),
    }
    sys.stdout.write(json.dumps(doc, indent=1) + "\n")
    return EXIT_OK


def _read(path: str):
    if path == "-":
        return sys.stdin.read()
    with open(path, "rb") as f:
        return f.read()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="outagesched", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the three-phase pipeline on an instance")
    p.add_argument("instance")
    p.add_argument("--out", default=_env("out", None))
    p.add_argument("--time-budget", type=float, default=_env("time-budget", 60.0))
    p.add_argument("--seed", type=int, default=_env("seed", 0))
    p.add_argument("--refuel-quantum", type=float, default=_env("refuel-quantum", 1000.0))
    p.add_argument("--breakpoints", type=int, default=_env_int("breakpoints"))
    p.add_argument("--cp-fraction", type=float, default=_env("cp-fraction", 1.0 / 6.0))
    p.add_argument("--cp-max-nodes", type=int, default=_env_int("cp-max-nodes"))
    p.add_argument("--sa-max-iters", type=int, default=_env_int("sa-max-iters"))
    p.add_argument("--sa-cooling-ratio", type=float, default=_env("sa-cooling-ratio", 0.995))
    p.add_argument("--sa-start-accept-ratio", type=float, default=_env("sa-start-accept-ratio", 0.5))
    p.add_argument("--sa-stop-idle", type=int, default=_env("sa-stop-idle", 125))
    p.add_argument("--sa-n-plateau", type=int, default=_env("sa-n-plateau", 100))
    p.add_argument("--sa-k-restart", type=float, default=_env("sa-k-restart", 2.0))
    p.add_argument("--sa-m-idle", type=int, default=_env("sa-m-idle", 50))
    p.add_argument("--sa-move-radius", type=int, default=_env("sa-move-radius", 20))
    p.add_argument("--verbose", action="store_true", default=_env("verbose", False))
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("validate", help="check a solution file exactly")
    p.add_argument("instance")
    p.add_argument("solution")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("generate", help="write a random instance with a feasible witness")
    p.add_argument("--out", default=None)
    p.add_argument("--witness", default=None, help="also write the witness solution here")
    p.add_argument("--plants", type=int, default=4)
    p.add_argument("--type1", type=int, default=2)
    p.add_argument("--cycles", type=int, default=2)
    p.add_argument("--weeks", type=int, default=20)
    p.add_argument("--steps-per-week", type=int, default=7)
    p.add_argument("--scenarios", type=int, default=3)
    p.add_argument("--demand-base", type=float, default=6.0)
    p.add_argument("--demand-amplitude", type=float, default=3.0)
    p.add_argument("--demand-noise", type=float, default=0.5)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("encode-sat", help="encode 3-literal clauses as an instance")
    p.add_argument("formula", help="clause file, '-' for stdin")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_encode_sat)

    p = sub.add_parser("stats", help="print instance dimensions")
    p.add_argument("instance")
    p.set_defaults(func=_cmd_stats)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
