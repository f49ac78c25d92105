"""Phase 2: simulated annealing over single-outage week shifts.

Moves shift one scheduled outage by less than `move_radius` weeks within
its start-week bounds.  Scheduling feasibility is checked incrementally
against only the constraints incident to the moved outage; the cost change
is evaluated by replanning the moved plant and pricing the type-1 side
with the equidistant piecewise-linear approximation.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .model import TOL, Instance, Schedule
from .planner import PwlCost, plan_plant

_CAL_PROBES = 1000


@dataclass(frozen=True)
class Move:
    plant: int
    cycle: int
    week: int


@dataclass
class SaParams:
    cooling_ratio: float = 0.995
    start_accept_ratio: float = 0.5
    stop_idle: int = 125
    n_plateau: int = 100
    k_restart: float = 2.0
    m_idle: int = 50
    move_radius: int = 20
    rng_seed: int = 0
    max_iters: Optional[int] = None   # iteration budget (reproducible runs)
    time_budget: Optional[float] = None

    def __post_init__(self):
        if not (0 < self.cooling_ratio < 1):
            raise ValueError("cooling_ratio must lie in (0, 1)")
        if not (0 < self.start_accept_ratio < 1):
            raise ValueError("start_accept_ratio must lie in (0, 1)")
        for name in ("stop_idle", "n_plateau", "m_idle", "move_radius"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


def _build_incidence(instance: Instance):
    """Outage -> incident scheduling constraints (the precomputed matrix)."""
    cpl = instance.coupling
    sep, mo, res = {}, {}, {}
    cap_by_plant = {}
    for ci, c in enumerate(cpl.separations):
        sep.setdefault(c.a, []).append(ci)
        sep.setdefault(c.b, []).append(ci)
    for ci, c in enumerate(cpl.max_offline):
        for o in c.outages:
            mo.setdefault(o, []).append(ci)
    for ci, c in enumerate(cpl.resources):
        for o in c.outages:
            res.setdefault(o, []).append(ci)
    for ci, c in enumerate(cpl.offline_capacity):
        for i in c.plants:
            cap_by_plant.setdefault(i, []).append(ci)
    return sep, mo, res, cap_by_plant


class SearchState:
    """Current schedule plus cached per-plant plans and per-step totals."""

    def __init__(self, instance: Instance, pwl: PwlCost, schedule: Schedule, results):
        self.instance = instance
        self.pwl = pwl
        self.schedule = schedule
        self.results = results
        self.p2_total = np.sum([r.p for r in results], axis=0)
        self.cost = self.estimate_cost()
        self.sep_inc, self.mo_inc, self.res_inc, self.cap_inc = _build_incidence(instance)
        self.scheduled_outages = [
            (i, k)
            for i in range(instance.I)
            for k in range(instance.type2[i].K)
            if schedule.scheduled(i, k)
        ]

    @classmethod
    def build(cls, instance: Instance, pwl: PwlCost, schedule: Schedule):
        """Plan every plant from minimum refuels; None when any plant has no
        feasible production plan."""
        sched = schedule.copy()
        results = []
        for i, plant in enumerate(instance.type2):
            rmin = np.array(
                [
                    c.rmin if sched.scheduled(i, k) else 0.0
                    for k, c in enumerate(plant.cycles)
                ]
            )
            res = plan_plant(instance, sched, i, rmin)
            if not res.feasible:
                return None
            sched.r[i][:] = res.refuels
            results.append(res)
        return cls(instance, pwl, sched, results)

    def estimate_cost(self) -> float:
        """Full recomputation of the approximate objective."""
        inst = self.instance
        refuel = 0.0
        remainder = 0.0
        S = inst.scenarios.S
        for i, plant in enumerate(inst.type2):
            r = self.results[i]
            for k, cyc in enumerate(plant.cycles):
                refuel += cyc.c_refuel * r.refuels[k]
            remainder += S * plant.c_final * r.x[-1]
        return refuel + self.pwl.eval_sum(self.p2_total) - remainder

    def snapshot(self):
        return (
            self.schedule.copy(),
            [r.copy() for r in self.results],
            self.p2_total.copy(),
            self.cost,
        )

    def restore(self, snap):
        schedule, results, p2, cost = snap
        self.schedule = schedule.copy()
        self.results = [r.copy() for r in results]
        self.p2_total = p2.copy()
        self.cost = cost


def valid_targets(state: SearchState, i: int, k: int, radius: int) -> np.ndarray:
    """Weeks reachable by one move: inside [to, ta], at distance < radius,
    inside the horizon, excluding the current start."""
    inst = state.instance
    cyc = inst.type2[i].cycles[k]
    ha = int(state.schedule.ha[i][k])
    lo = max(0, ha - radius + 1, cyc.to if cyc.to is not None else 0)
    hi = min(inst.grid.H - cyc.da, ha + radius - 1)
    if cyc.ta is not None:
        hi = min(hi, cyc.ta)
    if lo > hi:
        return np.empty(0, dtype=np.int64)
    targets = np.arange(lo, hi + 1, dtype=np.int64)
    return targets[targets != ha]


def move_sampler(state: SearchState, params: SaParams, rng) -> Optional[Callable[[], Optional[Move]]]:
    """Uniform two-stage sampler: outage first, then a valid target week.

    Returns None when the schedule has no scheduled outage at all."""
    outages = state.scheduled_outages
    if not outages:
        return None

    def sample() -> Optional[Move]:
        i, k = outages[rng.integers(len(outages))]
        targets = valid_targets(state, i, k, params.move_radius)
        if targets.size == 0:
            return None
        return Move(i, k, int(targets[rng.integers(targets.size)]))

    return sample


def check_move_feasible(state: SearchState, move: Move) -> bool:
    """Exact scheduling-constraint check restricted to constraints incident
    to the moved outage; equivalent to the full evaluator check."""
    inst = state.instance
    sched = state.schedule
    i, k, w = move.plant, move.cycle, move.week
    plant = inst.type2[i]
    cyc = plant.cycles[k]
    grid = inst.grid

    if w < 0 or w + cyc.da > grid.H:
        return False
    if cyc.to is not None and w < cyc.to:
        return False
    if cyc.ta is not None and w > cyc.ta:
        return False
    if k > 0 and sched.scheduled(i, k - 1):
        if w < sched.ha[i][k - 1] + plant.cycles[k - 1].da:
            return False
    if k + 1 < plant.K and sched.scheduled(i, k + 1):
        if w + cyc.da > sched.ha[i][k + 1]:
            return False

    def ha_of(ii, kk):
        if (ii, kk) == (i, k):
            return w
        return int(sched.ha[ii][kk]) if sched.scheduled(ii, kk) else None

    def span_hits(wk, da, lo, hi):
        return wk <= hi and wk + da - 1 >= lo

    for ci in state.sep_inc.get((i, k), ()):
        c = inst.coupling.separations[ci]
        wa = ha_of(*c.a)
        wb = ha_of(*c.b)
        if wa is None or wb is None:
            continue
        da_a = inst.type2[c.a[0]].cycles[c.a[1]].da
        da_b = inst.type2[c.b[0]].cycles[c.b[1]].da
        if not (span_hits(wa, da_a, c.week_lo, c.week_hi) and span_hits(wb, da_b, c.week_lo, c.week_hi)):
            continue
        diff = wa - wb
        if diff < c.se and -diff < c.se_prime:
            return False

    for ci in state.mo_inc.get((i, k), ()):
        c = inst.coupling.max_offline[ci]
        count = 0
        for (ii, kk) in c.outages:
            wk = ha_of(ii, kk)
            if wk is not None and wk <= c.week < wk + inst.type2[ii].cycles[kk].da:
                count += 1
        if count > c.limit:
            return False

    for ci in state.res_inc.get((i, k), ()):
        c = inst.coupling.resources[ci]
        affected = set(cyc.resource_weeks(w))
        if sched.scheduled(i, k):
            affected.update(cyc.resource_weeks(int(sched.ha[i][k])))
        for h in affected:
            usage = 0
            for (ii, kk) in c.outages:
                wk = ha_of(ii, kk)
                if wk is None:
                    continue
                if h in inst.type2[ii].cycles[kk].resource_weeks(wk):
                    usage += 1
            if usage > c.capacity:
                return False

    for ci in state.cap_inc.get(i, ()):
        c = inst.coupling.offline_capacity[ci]
        it_weeks = set(c.weeks)
        for h in range(w, w + cyc.da):
            if h not in it_weeks:
                continue
            for t in range(int(grid.week_start[h]), int(grid.week_start[h + 1])):
                total = 0.0
                for ii in c.plants:
                    pp = inst.type2[ii]
                    for kk in range(pp.K):
                        wk = ha_of(ii, kk)
                        if wk is not None and wk <= h < wk + pp.cycles[kk].da:
                            total += pp.pmax[t]
                            break
                if total > c.imax + TOL.bound_abs:
                    return False
    return True


def delta_evaluate(state: SearchState, move: Move):
    """Replan the moved plant and price the change; None when the planner
    cannot find a feasible production plan for the shifted outage."""
    inst = state.instance
    i = move.plant
    old = state.results[i]
    trial_sched = state.schedule.with_week(i, move.cycle, move.week)
    res = plan_plant(inst, trial_sched, i, old.refuels)
    if not res.feasible:
        return None

    plant = inst.type2[i]
    d_refuel = 0.0
    for k, cyc in enumerate(plant.cycles):
        d_refuel += cyc.c_refuel * (res.refuels[k] - old.refuels[k])

    changed = np.nonzero(res.p != old.p)[0]
    p2_old = state.p2_total[changed]
    p2_new = p2_old - old.p[changed] + res.p[changed]
    d_type1 = float(
        _kernels.pwl_delta(
            state.pwl.F, state.pwl.int_size, state.pwl.xmax, changed, p2_old, p2_new
        )
    )
    d_remainder = inst.scenarios.S * plant.c_final * (res.x[-1] - old.x[-1])
    return d_refuel + d_type1 - d_remainder, res


def apply_move(state: SearchState, move: Move, delta: float, res) -> None:
    i = move.plant
    old = state.results[i]
    changed = np.nonzero(res.p != old.p)[0]
    state.p2_total[changed] += res.p[changed] - old.p[changed]
    state.schedule.ha[i][move.cycle] = move.week
    state.schedule.r[i][:] = res.refuels
    state.results[i] = res
    state.cost += delta


def sa_accept(delta: float, tau: float, rng) -> bool:
    """Accept improving moves always, worsening ones with exp(-delta/tau)."""
    if delta <= 0:
        return True
    if tau <= 0:
        return False
    e = -delta / tau
    if e < -700.0:
        return False
    return rng.random() < math.exp(e)


def calibrate_temperature(state: SearchState, params: SaParams, rng) -> float:
    """Probe neighbours of the initial state and bisect the temperature
    until roughly start_accept_ratio of them would be accepted."""
    sample = move_sampler(state, params, rng)
    if sample is None:
        return 1.0
    deltas = []
    attempts = 0
    while len(deltas) < _CAL_PROBES and attempts < 5 * _CAL_PROBES:
        attempts += 1
        move = sample()
        if move is None or not check_move_feasible(state, move):
            continue
        ev = delta_evaluate(state, move)
        if ev is None:
            continue
        deltas.append(ev[0])
    if not deltas:
        return 1.0
    pos = np.clip(np.array(deltas), 0.0, None)
    lo, hi = 1e-12, 1e12
    for _ in range(100):
        mid = math.sqrt(lo * hi)
        acc = float(np.mean(np.minimum(1.0, np.exp(-pos / mid))))
        if acc < params.start_accept_ratio:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


@dataclass
class AnnealStats:
    iterations: int = 0
    accepted: int = 0
    restarts: int = 0
    plateaus: int = 0
    initial_tau: float = 0.0
    final_tau: float = 0.0
    best_costs: list = field(default_factory=list)


def anneal(
    state: SearchState,
    params: SaParams,
    log: Optional[Callable[[str], None]] = None,
) -> tuple:
    """Run the annealing chain; returns (best SearchState, AnnealStats).

    Geometric cooling with plateaus; after m_idle consecutive rejects the
    temperature jumps to k_restart times the previous run's start value;
    stop_idle consecutive rejects (counted independently of restarts) or
    the budget ends the run.  The best-cost state ever visited is returned.
    """
    stats = AnnealStats()
    best = state.snapshot()
    rng = np.random.default_rng(params.rng_seed)

    exhausted_budget = (params.max_iters is not None and params.max_iters <= 0) or (
        params.time_budget is not None and params.time_budget <= 0
    )
    sample = move_sampler(state, params, rng)
    if sample is None or exhausted_budget:
        out = SearchState(state.instance, state.pwl, best[0], best[1])
        return out, stats

    tau = tau_start = calibrate_temperature(state, params, rng)
    stats.initial_tau = tau
    deadline = (
        time.monotonic() + params.time_budget if params.time_budget is not None else None
    )
    idle_stop = 0
    idle_restart = 0
    plateau_ctr = 0

    while True:
        if params.max_iters is not None and stats.iterations >= params.max_iters:
            break
        if deadline is not None and stats.iterations % 64 == 0 and time.monotonic() > deadline:
            break
        if idle_stop >= params.stop_idle:
            break
        stats.iterations += 1
        plateau_ctr += 1

        accepted = False
        move = sample()
        if move is not None and check_move_feasible(state, move):
            ev = delta_evaluate(state, move)
            if ev is not None:
                delta, res = ev
                if sa_accept(delta, tau, rng):
                    apply_move(state, move, delta, res)
                    accepted = True
                    stats.accepted += 1
                    if state.cost < best[3] - 1e-12:
                        best = state.snapshot()
                        stats.best_costs.append(best[3])

        if accepted:
            idle_stop = 0
            idle_restart = 0
        else:
            idle_stop += 1
            idle_restart += 1

        if idle_restart >= params.m_idle:
            tau_start = params.k_restart * tau_start
            tau = tau_start
            idle_restart = 0
            plateau_ctr = 0
            stats.restarts += 1
        elif plateau_ctr >= params.n_plateau:
            tau *= params.cooling_ratio
            plateau_ctr = 0
            stats.plateaus += 1
            if log is not None:
                log(
                    f"plateau {stats.plateaus}: iter={stats.iterations} "
                    f"tau={tau:.6g} cost={state.cost:.6g} best={best[3]:.6g}"
                )

    stats.final_tau = tau
    out = SearchState(state.instance, state.pwl, best[0], best[1])
    return out, stats
