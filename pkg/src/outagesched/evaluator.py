"""Exact checker and scorer.

Verifies every constraint on a complete solution and computes the true
objective.  Everything here is plain numpy, written independently of the
planner's simulation kernel so the two act as cross-checks on each other.
Violations are collected exhaustively (the validator doubles as a
diagnostic report) and sorted canonically for deterministic output.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import TOL, Instance, Schedule, derive_campaigns

KINDS = (
    "OutageBounds",
    "ReloadBounds",
    "Demand",
    "Type1Bounds",
    "Type2Upper",
    "MaxModulation",
    "PowerProfile",
    "FuelNonneg",
    "Amax",
    "Smax",
    "Separation",
    "MaxOffline",
    "Resource",
    "OfflineCapacity",
    "OutageOrder",
)


@dataclass(frozen=True)
class Violation:
    """One broken constraint with its location and excess amount."""

    kind: str
    magnitude: float
    plant: Optional[int] = None
    cycle: Optional[int] = None
    t: Optional[int] = None
    s: Optional[int] = None
    week: Optional[int] = None

    def sort_key(self):
        none = -1
        return (
            KINDS.index(self.kind),
            self.plant if self.plant is not None else none,
            self.cycle if self.cycle is not None else none,
            self.t if self.t is not None else none,
            self.s if self.s is not None else none,
            self.week if self.week is not None else none,
        )

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "magnitude": self.magnitude}
        for f in ("plant", "cycle", "t", "s", "week"):
            v = getattr(self, f)
            if v is not None:
                d[f] = int(v)
        return d


def simulate_fuel(instance: Instance, schedule: Schedule, p2: np.ndarray) -> np.ndarray:
    """Fuel trajectories x[i, 0..T] implied by one scenario's type-2 production.

    Campaign steps deplete fuel by p*D; the first step of each outage applies
    the refuel transform; remaining outage steps leave fuel unchanged."""
    I = instance.I
    T = instance.grid.T
    if p2.shape != (I, T):
        raise ValueError("simulate_fuel expects the (I, T) type-2 production block")
    timelines = derive_campaigns(instance, schedule)
    x = np.zeros((I, T + 1))
    D = instance.grid.D
    for i, plant in enumerate(instance.type2):
        first_step = {}
        in_outage = np.zeros(T, dtype=bool)
        for iv in timelines[i].outages:
            first_step[iv.start] = iv.cycle
            in_outage[iv.start : iv.stop] = True
        x[i, 0] = plant.xi
        for t in range(T):
            if in_outage[t]:
                if t in first_step:
                    k = first_step[t]
                    cyc = plant.cycles[k]
                    x[i, t + 1] = cyc.q * x[i, t] + schedule.r[i][k] + cyc.qprime
                else:
                    x[i, t + 1] = x[i, t]
            else:
                x[i, t + 1] = x[i, t] - p2[i, t] * D
    return x


def _scheduling_violations(instance: Instance, schedule: Schedule) -> list[Violation]:
    """Checks of Schedule alone: bounds, order, reload bounds, coupling."""
    out = []
    H = instance.grid.H
    ws = instance.grid.week_start
    grid = instance.grid

    for i, plant in enumerate(instance.type2):
        prev_end = None
        seen_hole = False
        for k, cyc in enumerate(plant.cycles):
            if not schedule.scheduled(i, k):
                seen_hole = True
                if cyc.ta is not None:
                    out.append(Violation("OutageBounds", 1.0, plant=i, cycle=k))
                if abs(schedule.r[i][k]) > TOL.bound_abs:
                    out.append(
                        Violation("ReloadBounds", abs(schedule.r[i][k]), plant=i, cycle=k)
                    )
                continue
            w = int(schedule.ha[i][k])
            if seen_hole:
                out.append(Violation("OutageOrder", 1.0, plant=i, cycle=k))
            if cyc.to is not None and w < cyc.to:
                out.append(Violation("OutageBounds", float(cyc.to - w), plant=i, cycle=k))
            if cyc.ta is not None and w > cyc.ta:
                out.append(Violation("OutageBounds", float(w - cyc.ta), plant=i, cycle=k))
            if w < 0 or w + cyc.da > H:
                out.append(Violation("OutageBounds", 1.0, plant=i, cycle=k))
            if prev_end is not None and w < prev_end:
                out.append(Violation("OutageOrder", float(prev_end - w), plant=i, cycle=k))
            if not seen_hole:
                prev_end = w + cyc.da
            r = schedule.r[i][k]
            if r < cyc.rmin - TOL.bound_abs:
                out.append(Violation("ReloadBounds", cyc.rmin - r, plant=i, cycle=k))
            if r > cyc.rmax + TOL.bound_abs:
                out.append(Violation("ReloadBounds", r - cyc.rmax, plant=i, cycle=k))

    def active(i, k, h):
        if not schedule.scheduled(i, k):
            return False
        w = int(schedule.ha[i][k])
        return w <= h < w + instance.type2[i].cycles[k].da

    def span(i, k):
        w = int(schedule.ha[i][k])
        return w, w + instance.type2[i].cycles[k].da - 1

    for c in instance.coupling.separations:
        (ia, ka), (ib, kb) = c.a, c.b
        if not (schedule.scheduled(ia, ka) and schedule.scheduled(ib, kb)):
            continue
        alo, ahi = span(ia, ka)
        blo, bhi = span(ib, kb)
        if ahi < c.week_lo or alo > c.week_hi or bhi < c.week_lo or blo > c.week_hi:
            continue
        diff = int(schedule.ha[ia][ka]) - int(schedule.ha[ib][kb])
        if diff >= c.se or -diff >= c.se_prime:
            continue
        out.append(
            Violation(
                "Separation",
                float(min(c.se - diff, c.se_prime + diff)),
                plant=ia,
                cycle=ka,
                week=int(schedule.ha[ia][ka]),
            )
        )

    for c in instance.coupling.max_offline:
        count = sum(1 for (i, k) in c.outages if active(i, k, c.week))
        if count > c.limit:
            out.append(Violation("MaxOffline", float(count - c.limit), week=c.week))

    for c in instance.coupling.resources:
        usage = np.zeros(instance.grid.H + 64, dtype=np.int64)
        for (i, k) in c.outages:
            if not schedule.scheduled(i, k):
                continue
            cyc = instance.type2[i].cycles[k]
            for h in cyc.resource_weeks(int(schedule.ha[i][k])):
                if 0 <= h < len(usage):
                    usage[h] += 1
        for h in np.nonzero(usage > c.capacity)[0]:
            out.append(Violation("Resource", float(usage[h] - c.capacity), week=int(h)))

    for c in instance.coupling.offline_capacity:
        for h in c.weeks:
            worst = 0.0
            for t in range(int(ws[h]), int(ws[h + 1])):
                total = 0.0
                for i in c.plants:
                    plant = instance.type2[i]
                    if any(
                        active(i, k, int(grid.week_of_step[t]))
                        for k in range(plant.K)
                    ):
                        total += plant.pmax[t]
                worst = max(worst, total - c.imax)
            if worst > TOL.bound_abs:
                out.append(Violation("OfflineCapacity", worst, week=int(h)))

    return out


def check_feasibility(instance: Instance, schedule: Schedule, productions) -> list[Violation]:
    """All violations of a complete solution; empty iff feasible.

    `productions` holds one (J+I, T) array per scenario, type-1 plants
    first.  Fuel trajectories are recomputed here from the production."""
    T, S = instance.grid.T, instance.scenarios.S
    I, J = instance.I, instance.J
    D = instance.grid.D
    if len(productions) != S or any(pr.shape != (J + I, T) for pr in productions):
        raise ValueError("productions must hold one (J+I, T) array per scenario")

    out = _scheduling_violations(instance, schedule)
    timelines = derive_campaigns(instance, schedule)
    tol = TOL.bound_abs

    for s in range(S):
        pr = productions[s]
        p1 = pr[:J]
        p2 = pr[J:]
        x = simulate_fuel(instance, schedule, p2)

        diff = pr.sum(axis=0) - instance.scenarios.demand[:, s]
        for t in np.nonzero(np.abs(diff) > tol)[0]:
            out.append(Violation("Demand", abs(float(diff[t])), t=int(t), s=s))

        for j, plant in enumerate(instance.type1):
            lo = plant.pmin[:, s] - p1[j]
            hi = p1[j] - plant.pmax[:, s]
            for t in np.nonzero(np.maximum(lo, hi) > tol)[0]:
                out.append(
                    Violation(
                        "Type1Bounds", float(max(lo[t], hi[t])), plant=j, t=int(t), s=s
                    )
                )

        for i, plant in enumerate(instance.type2):
            for t in np.nonzero(x[i] < -tol)[0]:
                out.append(Violation("FuelNonneg", float(-x[i][t]), plant=i, t=int(t), s=s))

            for iv in timelines[i].outages:
                cyc = plant.cycles[iv.cycle]
                if x[i, iv.start] > cyc.amax + tol:
                    out.append(
                        Violation(
                            "Amax", float(x[i, iv.start] - cyc.amax),
                            plant=i, cycle=iv.cycle, s=s,
                        )
                    )
                if x[i, iv.start + 1] > cyc.smax + tol:
                    out.append(
                        Violation(
                            "Smax", float(x[i, iv.start + 1] - cyc.smax),
                            plant=i, cycle=iv.cycle, s=s,
                        )
                    )
                bad = np.abs(p2[i, iv.start : iv.stop])
                for off in np.nonzero(bad > tol)[0]:
                    out.append(
                        Violation(
                            "Type2Upper", float(bad[off]),
                            plant=i, cycle=iv.cycle, t=int(iv.start + off), s=s,
                        )
                    )

            for iv in timelines[i].campaigns:
                cyc = plant.cycles[max(iv.cycle, 0)]
                modulation = 0.0
                for t in iv.steps():
                    pm = plant.pmax[t]
                    if x[i, t] >= cyc.bo:
                        if p2[i, t] > pm + tol:
                            out.append(
                                Violation(
                                    "Type2Upper", float(p2[i, t] - pm),
                                    plant=i, cycle=iv.cycle, t=t, s=s,
                                )
                            )
                        if p2[i, t] < -tol:
                            out.append(
                                Violation(
                                    "Type2Upper", float(-p2[i, t]),
                                    plant=i, cycle=iv.cycle, t=t, s=s,
                                )
                            )
                        modulation += (pm - p2[i, t]) * D
                    else:
                        px = cyc.pb_at(x[i, t]) * pm
                        if x[i, t] >= px * D - tol:
                            lo = (1 - instance.scenarios.epsilon) * px
                            hi = (1 + instance.scenarios.epsilon) * px
                            excess = max(lo - p2[i, t], p2[i, t] - hi)
                            if excess > tol:
                                out.append(
                                    Violation(
                                        "PowerProfile", float(excess),
                                        plant=i, cycle=iv.cycle, t=t, s=s,
                                    )
                                )
                        elif abs(p2[i, t]) > tol:
                            out.append(
                                Violation(
                                    "PowerProfile", float(abs(p2[i, t])),
                                    plant=i, cycle=iv.cycle, t=t, s=s,
                                )
                            )
                if modulation > cyc.mmax + tol:
                    out.append(
                        Violation(
                            "MaxModulation", float(modulation - cyc.mmax),
                            plant=i, cycle=iv.cycle, s=s,
                        )
                    )

    out.sort(key=Violation.sort_key)
    return out


def compute_objective(
    instance: Instance,
    schedule: Schedule,
    productions,
    averaged_residual: bool = False,
) -> float:
    """Total cost: refuels + scenario-averaged type-1 production - residual fuel.

    The residual-fuel term sums over scenarios without the 1/S factor, which
    is the printed form of the objective; set averaged_residual=True for the
    alternate reading that divides it by S."""
    T, S = instance.grid.T, instance.scenarios.S
    J = instance.J
    D = instance.grid.D

    refuel_cost = 0.0
    for i, plant in enumerate(instance.type2):
        for k, cyc in enumerate(plant.cycles):
            refuel_cost += cyc.c_refuel * schedule.r[i][k]

    type1_cost = 0.0
    residual = 0.0
    for s in range(S):
        pr = productions[s]
        for j, plant in enumerate(instance.type1):
            type1_cost += float(np.dot(plant.cost[:, s], pr[j])) * D
        x = simulate_fuel(instance, schedule, pr[J:])
        for i, plant in enumerate(instance.type2):
            residual += plant.c_final * x[i, T]

    if averaged_residual:
        residual /= S
    return refuel_cost + type1_cost / S - residual


def violations_to_report(violations) -> dict:
    """Serializable violation report (same structured-text family as solutions)."""
    return {
        "feasible": len(violations) == 0,
        "count": len(violations),
        "violations": [v.to_dict() for v in violations],
    }
