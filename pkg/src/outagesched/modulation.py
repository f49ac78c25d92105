"""Phase 3: eliminate overproduction by lowering type-2 output.

A first pass caps the per-step type-2 total at what every scenario admits
(the minimum-demand scenario when type-1 minimum production is zero) and
may still adjust refuels; a second pass then freezes refuels and modulates
each scenario individually before type-1 plants fill the exact remaining
demand.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import TOL, Instance, Schedule
from .planner import (
    PlannerResult,
    fill_type1,
    min_type2_room,
    modulation_used,
    replan_suffix,
    scenario_room,
    simulate,
)


@dataclass
class ModulationResult:
    feasible: bool
    schedule: Schedule          # refuels possibly reduced
    results: list               # per-plant floor-scenario plans after modulation
    modulated_steps: int = 0


def _campaign_budget_ok(instance: Instance, res: PlannerResult) -> bool:
    mod = modulation_used(instance, res.layout, res.p, res.x)
    return bool(np.all(mod <= res.layout.cam_mmax + TOL.bound_abs))


def _mod_used_prefix(instance: Instance, res: PlannerResult, c: int, upto: int) -> float:
    """Modulation already booked in campaign c at steps strictly before upto."""
    layout = res.layout
    lo, hi = int(layout.cam_start[c]), min(int(layout.cam_stop[c]), upto)
    if hi <= lo:
        return 0.0
    pmax = instance.type2[res.plant].pmax[lo:hi]
    above = res.x[lo:hi] >= layout.cam_bo[c]
    return float(np.sum((pmax[above] - res.p[lo:hi][above]) * instance.grid.D))


def _try_modulate(
    instance: Instance,
    res: PlannerResult,
    t: int,
    amount: float,
    min_reducible_step,
) -> PlannerResult | None:
    """Lower plant output at step t by up to `amount`, re-simulate the rest
    of the horizon, and validate fuel and modulation budgets.  Returns the
    updated plan (or None); the input result is left untouched."""
    layout = res.layout
    c = int(layout.campaign_id[t])
    if c < 0 or res.p[t] <= TOL.bound_abs:
        return None
    if res.x[t] < layout.cam_bo[c]:
        return None  # profile-bound step: production is pinned, route elsewhere
    D = instance.grid.D
    used_before = _mod_used_prefix(instance, res, c, t)
    pmax_t = instance.type2[res.plant].pmax[t]
    headroom = (layout.cam_mmax[c] - used_before) / D - (pmax_t - res.p[t])
    delta = min(amount, float(res.p[t]), max(0.0, headroom))
    if delta <= TOL.bound_abs:
        return None

    trial = res.copy()
    trial.p[t] -= delta
    trial.x[t + 1] = trial.x[t] - trial.p[t] * D
    out = replan_suffix(instance, trial, t + 1, min_reducible_step)
    if out is None:
        return None
    if not _campaign_budget_ok(instance, out):
        return None
    return out


def _candidates(instance: Instance, results, t: int):
    """Plants modulatable at step t, in non-descending campaign-end order."""
    order = []
    for i, res in enumerate(results):
        c = int(res.layout.campaign_id[t])
        if c < 0 or res.p[t] <= TOL.bound_abs:
            continue
        if res.x[t] < res.layout.cam_bo[c]:
            continue
        order.append((int(res.layout.cam_stop[c]), i))
    order.sort()
    return [i for _, i in order]


def _sweep(instance, sched, res, room, allow_refuel_repair):
    """Walk steps in increasing order, eliminating overproduction.

    Mutates res and sched.r in place.  Returns (completed, stuck_step,
    modulated_count)."""
    p2 = np.sum([r.p for r in res], axis=0)
    modulated = 0
    for t in range(instance.grid.T):
        over = p2[t] - room[t]
        if over <= TOL.bound_abs:
            continue
        min_step = t + 1 if allow_refuel_repair else None
        for i in _candidates(instance, res, t):
            out = _try_modulate(instance, res[i], t, over, min_reducible_step=min_step)
            if out is None:
                continue
            p2 += out.p - res[i].p
            res[i] = out
            sched.r[i][:] = out.refuels
            modulated += 1
            over = p2[t] - room[t]
            if over <= TOL.bound_abs:
                break
        if over > TOL.bound_abs:
            return False, t, modulated
    return True, -1, modulated


def _cut_recent_refuel(instance, sched, base, sweep_res, t, quantum) -> bool:
    """Run-out-of-fuel fallback: reduce the most recent refuel of a plant
    still producing at the stuck step so that it runs dry earlier.

    Applies one quantum-sized cut to the pre-sweep plans in `base` (the
    sweep restarts afterwards).  Returns False when no cut is possible."""
    candidates = []
    for i, res in enumerate(sweep_res):
        if res.p[t] <= TOL.bound_abs:
            continue
        layout = res.layout
        recent = [
            (int(layout.outage_first[k]), k)
            for k in range(len(layout.outage_first))
            if 0 <= layout.outage_first[k] <= t
            and base[i].refuels[k] > layout.cyc_rmin[k] + TOL.refuel_step
        ]
        if recent:
            s, k = max(recent)
            candidates.append((s, i, k))
    candidates.sort(reverse=True)

    for s, i, k in candidates:
        trial = base[i].copy()
        cut = min(quantum, trial.refuels[k] - trial.layout.cyc_rmin[k])
        trial.refuels[k] -= cut
        out = replan_suffix(instance, trial, s, min_reducible_step=s)
        if out is None or not _campaign_budget_ok(instance, out):
            continue
        base[i] = out
        sched.r[i][:] = out.refuels
        return True
    return False


def modulate_min_scenario(
    instance: Instance,
    schedule: Schedule,
    results,
    refuel_quantum: float = 1000.0,
) -> ModulationResult:
    """Cap the type-2 total at every step so every scenario stays coverable.

    Sweeps steps in increasing order; at an overproducing step, plants are
    modulated in non-descending order of their current campaign's end, each
    as far as its remaining budget allows, with refuel repairs restricted
    to outages after the step.  When a step cannot be resolved, the most
    recent refuel of a plant still producing there is cut by one quantum
    (so it runs dry earlier) and the sweep restarts."""
    sched = schedule.copy()
    base = [r.copy() for r in results]
    room = min_type2_room(instance)
    max_restarts = 1 + 4 * sum(len(r.refuels) for r in results)

    for _ in range(max_restarts):
        res = [r.copy() for r in base]
        ok, stuck_t, modulated = _sweep(instance, sched, res, room, allow_refuel_repair=True)
        if ok:
            return ModulationResult(True, sched, res, modulated)
        if not _cut_recent_refuel(instance, sched, base, res, stuck_t, refuel_quantum):
            return ModulationResult(False, sched, res, modulated)
    return ModulationResult(False, sched, base, 0)


def modulate_per_scenario(instance: Instance, schedule: Schedule, results, s: int):
    """Per-scenario production with refuels frozen.

    Starts from fresh full-production trajectories and modulates down to
    the scenario's demand; when that sweep gets stuck (a plant slid under
    its profile threshold where output is pinned), the floor-scenario
    pattern is reused instead, which fits every scenario by construction.
    Type-1 plants then fill the exact remainder cheapest-first.  Returns
    (production (J+I, T), fully_feasible)."""
    T = instance.grid.T
    J, I = instance.J, instance.I

    res = []
    for i in range(I):
        base = results[i]
        p = np.zeros(T)
        x = np.zeros(T + 1)
        status, _, _ = simulate(instance, base.layout, base.refuels, p, x)
        if status != 0:
            # frozen refuels were validated under the floor pass; a failure
            # here means the instance data is degenerate
            return None, False
        res.append(PlannerResult(i, p, x, base.refuels.copy(), True, base.layout))

    room = scenario_room(instance, s)
    sched = schedule.copy()
    ok, _, _ = _sweep(instance, sched, res, room, allow_refuel_repair=False)
    if not ok:
        res = [r.copy() for r in results]
        floor_p2 = np.sum([r.p for r in res], axis=0)
        ok = bool(np.all(floor_p2 <= room + TOL.bound_abs))

    p2 = np.sum([r.p for r in res], axis=0)
    production = np.zeros((J + I, T))
    for i in range(I):
        production[J + i] = res[i].p
    for t in range(T):
        p1, residual = fill_type1(instance, t, s, float(p2[t]))
        production[:J, t] = p1
        if abs(residual) > TOL.bound_abs:
            ok = False
    return production, ok


def build_scenario_productions(instance: Instance, schedule: Schedule, results):
    """All scenarios' productions after the two-pass modulation."""
    productions = []
    all_ok = True
    for s in range(instance.scenarios.S):
        prod, ok = modulate_per_scenario(instance, schedule, results, s)
        if prod is None:
            prod = np.zeros((instance.J + instance.I, instance.grid.T))
            ok = False
        productions.append(prod)
        all_ok = all_ok and ok
    return productions, all_ok
