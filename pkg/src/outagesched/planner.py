"""Production planning engine.

Holds the scenario aggregation helpers, the exact and equidistant
piecewise-linear type-1 cost functions, and the greedy per-plant production
planner with its refuel reduction/increase passes.  Per-plant planning is
independent across plants; cost tables are immutable once built.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import TOL, Instance, ModelError, Schedule, derive_campaigns

# Accepted refuel increments per campaign are capped as a safety net against
# pathological 2%-of-a-shrinking-gap tails; normal exits (full production,
# rmax reached, infeasible increment) fire far earlier.
_MAX_INCREMENTS = 400
_MAX_REPAIRS = 60


@dataclass(frozen=True)
class PlantLayout:
    """Flat per-step/per-cycle arrays driving the simulation kernel.

    Campaign 0 is the stretch before the first scheduled outage; it borrows
    the profile parameters (bo, pb, mmax) of cycle 0.  Campaign c >= 1
    follows outage c-1 and uses that cycle's parameters.
    """

    plant: int
    campaign_id: np.ndarray   # (T,) int64, -1 during outages
    outage_id: np.ndarray     # (T,) int64, -1 outside outages
    outage_first: np.ndarray  # (K,) int64, -1 when unscheduled
    cyc_q: np.ndarray
    cyc_qp: np.ndarray
    cyc_amax: np.ndarray
    cyc_smax: np.ndarray
    cyc_rmin: np.ndarray
    cyc_rmax: np.ndarray
    cam_cycle: np.ndarray     # (C,) cycle whose campaign parameters apply
    cam_bo: np.ndarray
    cam_mmax: np.ndarray
    cam_start: np.ndarray     # (C,) first step of the campaign
    cam_stop: np.ndarray      # (C,) one past the campaign's last step
    cam_pb_lo: np.ndarray
    cam_pb_hi: np.ndarray
    pb_x: np.ndarray
    pb_y: np.ndarray
    n_scheduled: int

    @property
    def n_campaigns(self) -> int:
        return len(self.cam_cycle)

    def campaign_of_step(self, t: int) -> int:
        c = int(self.campaign_id[t])
        if c < 0:
            raise ValueError(f"step {t} lies inside an outage")
        return c


def build_plant_layout(instance: Instance, schedule: Schedule, i: int) -> PlantLayout:
    """Unfold one plant's schedule row into kernel-ready arrays."""
    plant = instance.type2[i]
    K = plant.K
    timeline = derive_campaigns(instance, schedule)[i]
    T = instance.grid.T

    campaign_id = np.full(T, -1, dtype=np.int64)
    outage_id = np.full(T, -1, dtype=np.int64)
    outage_first = np.full(K, -1, dtype=np.int64)
    for iv in timeline.outages:
        outage_id[iv.start : iv.stop] = iv.cycle
        outage_first[iv.cycle] = iv.start

    n_cam = len(timeline.campaigns)
    cam_cycle = np.zeros(n_cam, dtype=np.int64)
    cam_start = np.zeros(n_cam, dtype=np.int64)
    cam_stop = np.zeros(n_cam, dtype=np.int64)
    for c, iv in enumerate(timeline.campaigns):
        cam_cycle[c] = 0 if iv.cycle < 0 else iv.cycle
        cam_start[c] = iv.start
        cam_stop[c] = iv.stop
        campaign_id[iv.start : iv.stop] = c

    pb_off = np.zeros(K + 1, dtype=np.int64)
    xs, ys = [], []
    for k, cyc in enumerate(plant.cycles):
        xs.append(cyc.pb_fuel)
        ys.append(cyc.pb_value)
        pb_off[k + 1] = pb_off[k] + len(cyc.pb_fuel)

    return PlantLayout(
        plant=i,
        campaign_id=campaign_id,
        outage_id=outage_id,
        outage_first=outage_first,
        cyc_q=np.array([c.q for c in plant.cycles]),
        cyc_qp=np.array([c.qprime for c in plant.cycles]),
        cyc_amax=np.array([c.amax for c in plant.cycles]),
        cyc_smax=np.array([c.smax for c in plant.cycles]),
        cyc_rmin=np.array([c.rmin for c in plant.cycles]),
        cyc_rmax=np.array([c.rmax for c in plant.cycles]),
        cam_cycle=cam_cycle,
        cam_bo=np.array([plant.cycles[c].bo for c in cam_cycle]),
        cam_mmax=np.array([plant.cycles[c].mmax for c in cam_cycle]),
        cam_start=cam_start,
        cam_stop=cam_stop,
        cam_pb_lo=pb_off[cam_cycle],
        cam_pb_hi=pb_off[cam_cycle + 1],
        pb_x=np.concatenate(xs),
        pb_y=np.concatenate(ys),
        n_scheduled=len(timeline.outages),
    )


def simulate(
    instance: Instance,
    layout: PlantLayout,
    refuels: np.ndarray,
    p: np.ndarray,
    x: np.ndarray,
    t0: int = 0,
    x0: float | None = None,
):
    """Run the greedy kernel from step t0, filling p/x in place.

    Returns (status, cycle, excess) from the kernel.  mod accounting is
    recomputed separately by modulation_used()."""
    plant = instance.type2[layout.plant]
    if x0 is None:
        x0 = plant.xi if t0 == 0 else float(x[t0])
    return _kernels.greedy_simulate(
        t0,
        x0,
        plant.pmax,
        instance.grid.D,
        TOL.bound_abs,
        layout.campaign_id,
        layout.outage_id,
        layout.outage_first,
        layout.cyc_q,
        layout.cyc_qp,
        layout.cyc_amax,
        layout.cyc_smax,
        refuels,
        layout.cam_bo,
        layout.cam_pb_lo,
        layout.cam_pb_hi,
        layout.pb_x,
        layout.pb_y,
        p,
        x,
    )


def modulation_used(instance: Instance, layout: PlantLayout, p: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Accumulated modulation per campaign, counting only steps at or above
    the profile threshold."""
    pmax = instance.type2[layout.plant].pmax
    D = instance.grid.D
    out = np.zeros(layout.n_campaigns)
    cam = layout.campaign_id
    mask = cam >= 0
    above = np.zeros_like(mask)
    above[mask] = x[:-1][mask] >= layout.cam_bo[cam[mask]]
    sel = mask & above
    np.add.at(out, cam[sel], (pmax[sel] - p[sel]) * D)
    return out


@dataclass
class PlannerResult:
    """One plant's trajectory for the full-production scenario."""

    plant: int
    p: np.ndarray        # (T,)
    x: np.ndarray        # (T+1,)
    refuels: np.ndarray  # (K,)
    feasible: bool
    layout: PlantLayout

    def copy(self) -> "PlannerResult":
        return PlannerResult(
            self.plant,
            self.p.copy(),
            self.x.copy(),
            self.refuels.copy(),
            self.feasible,
            self.layout,
        )


def plan_production(
    instance: Instance,
    schedule: Schedule,
    i: int,
    refuels,
    layout: PlantLayout | None = None,
) -> PlannerResult:
    """Greedy max-production plan for plant i, repairing upper fuel bounds.

    When the fuel level before (after) an outage breaks its bound, the
    nearest reducible refuel at or before that outage is lowered by the
    minimal amount predicted to restore the bound, and the plant is
    re-simulated; the walk recurses toward the horizon start.  feasible is
    False when no reducible refuel remains.
    """
    if layout is None:
        layout = build_plant_layout(instance, schedule, i)
    T = instance.grid.T
    r = np.asarray(refuels, dtype=np.float64).copy()
    r[layout.outage_first < 0] = 0.0
    p = np.zeros(T)
    x = np.zeros(T + 1)

    last_fail = None
    for _ in range(_MAX_REPAIRS + 10 * len(r)):
        status, k, excess = simulate(instance, layout, r, p, x)
        if status == _kernels.SIM_OK:
            return PlannerResult(i, p, x, r, True, layout)

        if last_fail is not None and last_fail[:2] == (status, k):
            if last_fail[2] - excess < TOL.refuel_step:
                # reduction had no traction (plant saturated in between):
                # exhaust that refuel and let the walk move further back
                j_stuck = last_fail[3]
                r[j_stuck] = layout.cyc_rmin[j_stuck]

        j = k if status == _kernels.SIM_SMAX else k - 1
        effect = 1.0
        while j >= 0:
            if r[j] > layout.cyc_rmin[j] + TOL.refuel_step and effect > 1e-12:
                break
            effect *= layout.cyc_q[j]
            j -= 1
        if j < 0:
            return PlannerResult(i, p, x, r, False, layout)
        need = excess / max(effect, 1e-12) + TOL.refuel_step
        r[j] = max(layout.cyc_rmin[j], r[j] - need)
        last_fail = (status, k, excess, j)

    return PlannerResult(i, p, x, r, False, layout)


def increase_refuels(instance: Instance, schedule: Schedule, i: int, result: PlannerResult) -> PlannerResult:
    """Raise refuels toward rmax, last campaign first, in 2% increments.

    Each increment is validated by a strict re-simulation; an increment that
    breaks a fuel bound is undone and the pass moves to the previous
    campaign.  A campaign whose downstream steps all produce at pmax is
    skipped.  Refuels never decrease and never exceed rmax.
    """
    if not result.feasible:
        raise ValueError("increase_refuels requires a feasible plan")
    layout = result.layout
    plant = instance.type2[i]
    r = result.refuels.copy()
    p, x = result.p.copy(), result.x.copy()

    scheduled = [k for k in range(len(r)) if layout.outage_first[k] >= 0]
    for k in reversed(scheduled):
        _kernels.raise_refuel(
            k,
            int(layout.outage_first[k]),
            float(layout.cyc_rmax[k]),
            _MAX_INCREMENTS,
            TOL.refuel_step,
            plant.pmax,
            instance.grid.D,
            TOL.bound_abs,
            layout.campaign_id,
            layout.outage_id,
            layout.outage_first,
            layout.cyc_q,
            layout.cyc_qp,
            layout.cyc_amax,
            layout.cyc_smax,
            r,
            layout.cam_bo,
            layout.cam_pb_lo,
            layout.cam_pb_hi,
            layout.pb_x,
            layout.pb_y,
            p,
            x,
        )
    return PlannerResult(i, p, x, r, True, layout)


def plan_plant(instance: Instance, schedule: Schedule, i: int, refuels) -> PlannerResult:
    """plan_production followed by increase_refuels (the local-search path)."""
    res = plan_production(instance, schedule, i, refuels)
    if not res.feasible:
        return res
    return increase_refuels(instance, schedule, i, res)


def replan_suffix(
    instance: Instance,
    result: PlannerResult,
    t0: int,
    min_reducible_step: int | None,
) -> PlannerResult | None:
    """Re-simulate a plant from step t0 (fuel taken from result.x[t0]),
    keeping everything before t0 frozen.

    Fuel-bound failures may be repaired by reducing refuels, but only of
    outages starting at or after min_reducible_step; pass None to forbid
    reductions entirely.  Returns an updated copy, or None when the suffix
    cannot be made feasible without touching frozen history."""
    layout = result.layout
    r = result.refuels.copy()
    p = result.p.copy()
    x = result.x.copy()

    last_fail = None
    for _ in range(_MAX_REPAIRS + 10 * len(r)):
        status, k, excess = simulate(instance, layout, r, p, x, t0=t0)
        if status == _kernels.SIM_OK:
            return PlannerResult(result.plant, p, x, r, True, layout)
        if min_reducible_step is None:
            return None

        if last_fail is not None and last_fail[:2] == (status, k):
            if last_fail[2] - excess < TOL.refuel_step:
                j_stuck = last_fail[3]
                r[j_stuck] = layout.cyc_rmin[j_stuck]

        j = k if status == _kernels.SIM_SMAX else k - 1
        effect = 1.0
        while j >= 0:
            if layout.outage_first[j] < min_reducible_step:
                return None
            if r[j] > layout.cyc_rmin[j] + TOL.refuel_step and effect > 1e-12:
                break
            effect *= layout.cyc_q[j]
            j -= 1
        if j < 0:
            return None
        need = excess / max(effect, 1e-12) + TOL.refuel_step
        r[j] = max(layout.cyc_rmin[j], r[j] - need)
        last_fail = (status, k, excess, j)
    return None


# ---------------------------------------------------------------------------
# Scenario aggregation and type-1 cost functions
# ---------------------------------------------------------------------------


def min_demand_scenario(scenarios) -> np.ndarray:
    """Elementwise minimum demand over scenarios."""
    return np.min(scenarios.demand, axis=1)


def min_type2_room(instance: Instance) -> np.ndarray:
    """Largest total type-2 production acceptable in every scenario.

    Equals the minimum-demand scenario when type-1 minimum production is
    zero; otherwise the forced type-1 minimum is subtracted per scenario
    before taking the minimum."""
    dem = instance.scenarios.demand.copy()
    for plant in instance.type1:
        dem = dem - plant.pmin
    return np.min(dem, axis=1)


def scenario_room(instance: Instance, s: int) -> np.ndarray:
    dem = instance.scenarios.demand[:, s].copy()
    for plant in instance.type1:
        dem = dem - plant.pmin[:, s]
    return dem


def _gather_type1(instance: Instance, t: int, s: int):
    pmin = np.array([p.pmin[t, s] for p in instance.type1])
    pmax = np.array([p.pmax[t, s] for p in instance.type1])
    cost = np.array([p.cost[t, s] for p in instance.type1])
    return pmin, pmax, cost


def fill_type1(instance: Instance, t: int, s: int, p2_total: float):
    """Exact cheapest-first type-1 fill of the demand slack at (t, s).

    Returns (production vector over type-1 plants, residual).  A positive
    residual means type-1 capacity was insufficient; a negative one means
    the type-2 total already exceeds what the scenario admits."""
    pmin, pmax, cost = _gather_type1(instance, t, s)
    p = pmin.copy()
    residual = float(instance.scenarios.demand[t, s] - p2_total - pmin.sum())
    if residual < 0:
        return p, residual
    for j in np.argsort(cost, kind="stable"):
        take = min(residual, pmax[j] - pmin[j])
        p[j] += take
        residual -= take
        if residual <= 0:
            residual = 0.0
            break
    return p, residual


@dataclass(frozen=True)
class StepCost:
    """Exact type-1 cost of covering demand above a given total type-2
    production at one step, averaged over scenarios.

    The cost of the forced per-plant minimum production is a schedule
    independent constant held in base_cost; ys covers the adjustable part,
    so ys is convex, non-increasing, and zero from xmax on."""

    xs: np.ndarray
    ys: np.ndarray
    base_cost: float
    xmax: float

    def eval(self, p2) -> np.ndarray:
        return np.interp(p2, self.xs, self.ys)


def _adjustable_cost(slack, caps, costs, penalty, D):
    """Vectorized cheapest-first fill cost for slack >= 0 (one scenario)."""
    slack = np.atleast_1d(np.asarray(slack, dtype=np.float64))
    total = np.zeros_like(slack)
    cum = 0.0
    for cap, c in zip(caps, costs):
        total += c * D * np.clip(slack - cum, 0.0, cap)
        cum += cap
    total += penalty * D * np.clip(slack - cum, 0.0, None)
    return total


def build_type1_cost(instance: Instance, t: int) -> StepCost:
    """Exact aggregated cost function for one time step."""
    S = instance.scenarios.S
    D = instance.grid.D
    scen = []
    base = 0.0
    kinks = {0.0}
    xmax = 0.0
    for s in range(S):
        pmin, pmax, cost = _gather_type1(instance, t, s)
        order = np.argsort(cost, kind="stable")
        caps = (pmax - pmin)[order]
        costs = cost[order]
        penalty = 10.0 * cost.max() if len(cost) else 10.0
        dem_eff = instance.scenarios.demand[t, s] - pmin.sum()
        base += float((cost * pmin).sum()) * D
        cum = np.concatenate(([0.0], np.cumsum(caps)))
        for m in range(len(cum)):
            kinks.add(max(0.0, dem_eff - cum[m]))
        xmax = max(xmax, dem_eff)
        scen.append((caps, costs, penalty, dem_eff))
    xmax = max(xmax, 0.0)
    xs = np.array(sorted(kinks))
    ys = np.zeros_like(xs)
    for caps, costs, penalty, dem_eff in scen:
        ys += _adjustable_cost(np.clip(dem_eff - xs, 0.0, None), caps, costs, penalty, D)
    ys /= S
    return StepCost(xs=xs, ys=ys, base_cost=base / S, xmax=xmax)


@dataclass(frozen=True)
class PwlCost:
    """Exact and equidistant-approximated cost functions for all steps."""

    steps: tuple            # StepCost per t
    F: np.ndarray           # (T, B) costs at equidistant breakpoints
    int_size: np.ndarray    # (T,) breakpoint spacing
    xmax: np.ndarray        # (T,)
    count: int

    def eval(self, t: int, p2: float) -> float:
        return float(_kernels.pwl_eval_one(self.F, self.int_size, self.xmax, t, p2))

    def eval_exact(self, t: int, p2) -> float | np.ndarray:
        return self.steps[t].eval(p2)

    def eval_sum(self, p2: np.ndarray) -> float:
        return float(_kernels.pwl_eval_sum(self.F, self.int_size, self.xmax, p2))

    def base_cost(self) -> float:
        return float(sum(s.base_cost for s in self.steps))


def approximate_pwl(steps, count: int) -> PwlCost:
    """Equidistant upper-bound approximation with `count` breakpoints."""
    if count < 2:
        raise ValueError("approximate_pwl needs at least 2 breakpoints")
    steps = tuple(steps)
    T = len(steps)
    F = np.zeros((T, count))
    int_size = np.ones(T)
    xmax = np.zeros(T)
    for t, sc in enumerate(steps):
        xmax[t] = sc.xmax
        if sc.xmax <= 0:
            continue
        int_size[t] = sc.xmax / (count - 1)
        F[t] = sc.eval(np.arange(count) * int_size[t])
    return PwlCost(steps=steps, F=F, int_size=int_size, xmax=xmax, count=count)


def build_pwl(instance: Instance, count: int | None = None) -> PwlCost:
    """Cost tables for the whole horizon; default 3 breakpoints per plant."""
    if count is None:
        count = max(2, 3 * instance.I)
    return approximate_pwl(
        (build_type1_cost(instance, t) for t in range(instance.grid.T)), count
    )
