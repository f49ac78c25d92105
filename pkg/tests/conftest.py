"""Shared fixtures and independent test oracles.

The oracles here deliberately re-derive results from the problem data in
straightforward (slow) ways, separate from the library's code paths."""
from __future__ import annotations

import numpy as np
import pytest

from outagesched.model import (
    CouplingConstraints,
    Cycle,
    Instance,
    ScenarioSet,
    Schedule,
    TimeGrid,
    Type1Plant,
    Type2Plant,
    derive_campaigns,
)
from outagesched.instance_io import GeneratorParams, generate_instance


def make_cycle(**kw):
    """Cycle with innocuous defaults; override what the test is about."""
    d = dict(
        da=1,
        to=None,
        ta=None,
        rmin=0.0,
        rmax=100.0,
        q=0.9,
        qprime=0.0,
        amax=1e6,
        smax=1e6,
        bo=0.0,
        mmax=1e6,
        pb_fuel=np.array([0.0]),
        pb_value=np.array([1.0]),
        c_refuel=1.0,
        resource_windows=((0, 1),),
    )
    d.update(kw)
    if d["bo"] > 0 and len(d["pb_fuel"]) == 1:
        d["pb_fuel"] = np.array([0.0, d["bo"]])
        d["pb_value"] = np.array([0.5, 1.0])
    return Cycle(**d)


def make_instance(
    H=6,
    steps_per_week=1,
    D=1.0,
    plants=None,
    demand=None,
    S=1,
    epsilon=0.0,
    type1_pmax=1000.0,
    type1_cost=2.0,
    coupling=None,
):
    """Single type-1 plant instance with hand-specified type-2 plants.

    plants: list of dicts {pmax: scalar or (T,), xi, cycles: [Cycle], c_final}.
    demand: scalar, (T,), or (T, S).
    """
    grid = TimeGrid.uniform(H, steps_per_week, D)
    T = grid.T
    if plants is None:
        plants = [dict(pmax=10.0, xi=100.0, cycles=[make_cycle()])]
    t2 = []
    for spec in plants:
        pmax = spec.get("pmax", 10.0)
        pmax = np.full(T, float(pmax)) if np.isscalar(pmax) else np.asarray(pmax, float)
        t2.append(
            Type2Plant(
                pmax=pmax,
                xi=float(spec.get("xi", 100.0)),
                c_final=float(spec.get("c_final", 1.0)),
                cycles=tuple(spec.get("cycles", [make_cycle()])),
            )
        )
    if demand is None:
        demand = sum(float(np.max(p.pmax)) for p in t2) + 5.0
    demand = np.asarray(demand, dtype=np.float64)
    if demand.ndim == 0:
        demand = np.full((T, S), float(demand))
    elif demand.ndim == 1:
        demand = np.repeat(demand[:, None], S, axis=1)
    type1 = Type1Plant(
        pmin=np.zeros((T, S)),
        pmax=np.full((T, S), float(type1_pmax)),
        cost=np.full((T, S), float(type1_cost)),
    )
    return Instance(
        grid=grid,
        type1=(type1,),
        type2=tuple(t2),
        scenarios=ScenarioSet(S=S, demand=demand, epsilon=epsilon),
        coupling=coupling or CouplingConstraints(),
    )


# ---------------------------------------------------------------------------
# Independent oracles
# ---------------------------------------------------------------------------


def oracle_fuel(instance, schedule, p2):
    """Step-by-step fuel re-simulation, written from the recurrences alone."""
    T = instance.grid.T
    D = instance.grid.D
    ws = instance.grid.week_start
    out = np.zeros((instance.I, T + 1))
    for i, plant in enumerate(instance.type2):
        outage_steps = {}
        for k, cyc in enumerate(plant.cycles):
            if schedule.ha[i][k] == -1:
                continue
            w = int(schedule.ha[i][k])
            lo, hi = int(ws[w]), int(ws[w + cyc.da])
            for t in range(lo, hi):
                outage_steps[t] = (k, t == lo)
        level = plant.xi
        out[i, 0] = level
        for t in range(T):
            if t in outage_steps:
                k, is_first = outage_steps[t]
                if is_first:
                    cyc = plant.cycles[k]
                    level = cyc.q * level + schedule.r[i][k] + cyc.qprime
            else:
                level = level - p2[i, t] * D
            out[i, t + 1] = level
    return out


def oracle_objective(instance, schedule, productions):
    """Spreadsheet-style objective recomputation (nested loops)."""
    total = 0.0
    for i, plant in enumerate(instance.type2):
        for k, cyc in enumerate(plant.cycles):
            total += cyc.c_refuel * schedule.r[i][k]
    S = instance.scenarios.S
    t1 = 0.0
    for s in range(S):
        for t in range(instance.grid.T):
            for j, plant in enumerate(instance.type1):
                t1 += plant.cost[t, s] * productions[s][j, t] * instance.grid.D
    total += t1 / S
    for s in range(S):
        x = oracle_fuel(instance, schedule, productions[s][instance.J :])
        for i, plant in enumerate(instance.type2):
            total -= plant.c_final * x[i, -1]
    return total


SCHEDULING_KINDS = {
    "OutageBounds",
    "OutageOrder",
    "Separation",
    "MaxOffline",
    "Resource",
    "OfflineCapacity",
}


def scheduling_violations(instance, schedule):
    """Scheduling-constraint violations via the exact evaluator."""
    from outagesched import evaluator

    zero = [
        np.zeros((instance.J + instance.I, instance.grid.T))
        for _ in range(instance.scenarios.S)
    ]
    return [
        v
        for v in evaluator.check_feasibility(instance, schedule, zero)
        if v.kind in SCHEDULING_KINDS
    ]


def brute_force_satisfiable(formula) -> bool:
    """2^n enumeration: some assignment gives every clause a true literal."""
    for bits in range(1 << formula.n):
        assignment = [(bits >> v) & 1 == 1 for v in range(formula.n)]
        if all(
            any(assignment[abs(l) - 1] == (l > 0) for l in clause)
            for clause in formula.clauses
        ):
            return True
    return False


def oracle_type1_cost(instance, t, p2):
    """Scenario-averaged adjustable type-1 cost at one step, written as a
    direct per-scenario greedy fill over sorted plants."""
    D = instance.grid.D
    total = 0.0
    for s in range(instance.scenarios.S):
        plants = sorted(
            (
                (p.cost[t, s], p.pmax[t, s] - p.pmin[t, s])
                for p in instance.type1
            ),
        )
        slack = instance.scenarios.demand[t, s] - p2
        for p in instance.type1:
            slack -= p.pmin[t, s]
        cost = 0.0
        remaining = max(0.0, slack)
        for c, cap in plants:
            take = min(remaining, cap)
            cost += c * take * D
            remaining -= take
        if remaining > 0 and plants:
            cost += 10.0 * max(c for c, _ in plants) * remaining * D
        total += cost
    return total / instance.scenarios.S


# ---------------------------------------------------------------------------
# Generated pools
# ---------------------------------------------------------------------------


def pool_params(seed: int) -> GeneratorParams:
    """Desk-scale dimensions drawn from the seed (I<=6, K<=3, H<=30, T<=210, S<=5)."""
    rng = np.random.default_rng(seed + 777)
    return GeneratorParams(
        I=int(rng.integers(2, 7)),
        J=int(rng.integers(1, 4)),
        K=int(rng.integers(1, 4)),
        H=int(rng.integers(14, 31)),
        steps_per_week=int(rng.integers(3, 8)),
        S=int(rng.integers(1, 6)),
        demand_profile=(140.0, 50.0, 8.0),
        constraint_density=float(rng.uniform(0.2, 0.8)),
        seed=seed,
    )


@pytest.fixture(scope="session")
def small_pool():
    """Ten generated instances with witnesses (shared across tests)."""
    out = []
    for seed in range(10):
        params = pool_params(seed)
        out.append((params, *generate_instance(params)))
    return out


@pytest.fixture(scope="session")
def one_instance(small_pool):
    _, instance, witness = small_pool[0]
    return instance, witness
