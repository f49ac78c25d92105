"""Domain types shared by every solver phase.

Two discretizations of the horizon coexist: weeks (outages are scheduled at
week granularity) and time steps (production and fuel levels live on steps).
All model objects are immutable after construction; derivations are pure
functions of their inputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

# Week index used in external files for an outage that is not scheduled.
# Internally, always test with Schedule.scheduled()/scheduled_mask() instead
# of comparing against the sentinel directly.
UNSCHEDULED = -1


@dataclass(frozen=True)
class Tolerances:
    """Numeric tolerances, stated once and used everywhere."""

    bound_abs: float = 1e-6     # bound / demand-equality comparisons
    refuel_step: float = 1e-6   # smallest refuel increment worth applying


TOL = Tolerances()


class ModelError(ValueError):
    """An invariant of the domain model was violated."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class TimeGrid:
    """Step/week structure of the horizon.

    Weeks are contiguous, ordered step ranges covering [0, T).  All steps
    have the same length D (hours).
    """

    T: int
    H: int
    D: float
    week_of_step: np.ndarray  # int array of length T
    week_start: np.ndarray = field(init=False)  # length H+1, week h = [ws[h], ws[h+1])

    def __post_init__(self):
        wos = np.asarray(self.week_of_step, dtype=np.int64)
        if self.T < 1 or self.H < 1:
            raise ModelError("grid: T and H must be >= 1")
        if self.D <= 0:
            raise ModelError("grid: D must be > 0")
        if wos.shape != (self.T,):
            raise ModelError("grid: week_of_step must have length T")
        if wos[0] != 0 or wos[-1] != self.H - 1:
            raise ModelError("grid: weeks must cover [0, H)")
        diffs = np.diff(wos)
        if np.any((diffs != 0) & (diffs != 1)):
            raise ModelError("grid: weeks must be contiguous and ordered")
        starts = np.searchsorted(wos, np.arange(self.H), side="left")
        ws = np.empty(self.H + 1, dtype=np.int64)
        ws[: self.H] = starts
        ws[self.H] = self.T
        if np.any(np.diff(ws) < 1):
            raise ModelError("grid: every week needs at least one step")
        object.__setattr__(self, "week_of_step", _readonly(wos))
        object.__setattr__(self, "week_start", _readonly(ws))

    def steps_of_week(self, h: int) -> range:
        return range(int(self.week_start[h]), int(self.week_start[h + 1]))

    @staticmethod
    def uniform(H: int, steps_per_week: int, D: float) -> "TimeGrid":
        wos = np.repeat(np.arange(H, dtype=np.int64), steps_per_week)
        return TimeGrid(T=H * steps_per_week, H=H, D=D, week_of_step=wos)


@dataclass(frozen=True)
class Type1Plant:
    """Flexible plant: production bounded per step and scenario, costed per MWh."""

    pmin: np.ndarray  # (T, S)
    pmax: np.ndarray  # (T, S)
    cost: np.ndarray  # (T, S) currency per power-hour

    def __post_init__(self):
        pmin = np.asarray(self.pmin, dtype=np.float64)
        pmax = np.asarray(self.pmax, dtype=np.float64)
        cost = np.asarray(self.cost, dtype=np.float64)
        if not (pmin.shape == pmax.shape == cost.shape) or pmin.ndim != 2:
            raise ModelError("type1: pmin/pmax/cost must share shape (T, S)")
        if np.any(pmin < -TOL.bound_abs) or np.any(pmax - pmin < -TOL.bound_abs):
            raise ModelError("type1: need 0 <= pmin <= pmax for all t, s")
        object.__setattr__(self, "pmin", _readonly(pmin))
        object.__setattr__(self, "pmax", _readonly(pmax))
        object.__setattr__(self, "cost", _readonly(cost))


@dataclass(frozen=True)
class Cycle:
    """One outage plus the production campaign that follows it.

    ``pb`` is stored as breakpoints over fuel in [0, bo] with linear
    interpolation; its value at bo must be 1.  ``resource_windows`` lists
    (offset_weeks, duration_weeks) relative to the outage start during which
    the outage consumes maintenance resources.
    """

    da: int
    to: Optional[int]
    ta: Optional[int]
    rmin: float
    rmax: float
    q: float
    qprime: float
    amax: float
    smax: float
    bo: float
    mmax: float
    pb_fuel: np.ndarray
    pb_value: np.ndarray
    c_refuel: float
    resource_windows: tuple = ((0, None),)  # None duration means the outage span

    def __post_init__(self):
        if self.da < 1:
            raise ModelError("cycle: outage length da must be >= 1 week")
        if self.rmin < 0 or self.rmin > self.rmax + TOL.bound_abs:
            raise ModelError("cycle: reload bounds out of order (need 0 <= rmin <= rmax)")
        if self.q >= 1.0:
            raise ModelError("cycle: refuel coefficient q must be < 1")
        if self.bo < 0 or self.mmax < 0 or self.amax < 0 or self.smax < 0:
            raise ModelError("cycle: fuel bounds and mmax must be >= 0")
        pf = np.asarray(self.pb_fuel, dtype=np.float64)
        pv = np.asarray(self.pb_value, dtype=np.float64)
        if pf.shape != pv.shape or pf.ndim != 1 or pf.size < 1:
            raise ModelError("cycle: pb needs matching 1-d breakpoint arrays")
        if np.any(np.diff(pf) <= 0):
            raise ModelError("cycle: pb fuel breakpoints must be strictly increasing")
        if np.any(pv < -TOL.bound_abs) or np.any(pv > 1 + TOL.bound_abs):
            raise ModelError("cycle: pb values must lie in [0, 1]")
        if abs(self.pb_at(self.bo) - 1.0) > TOL.bound_abs:
            raise ModelError("cycle: pb(bo) must equal 1")
        windows = []
        for off, dur in self.resource_windows:
            windows.append((int(off), self.da if dur is None else int(dur)))
        object.__setattr__(self, "pb_fuel", _readonly(pf))
        object.__setattr__(self, "pb_value", _readonly(pv))
        object.__setattr__(self, "resource_windows", tuple(windows))

    def pb_at(self, x: float) -> float:
        """Evaluate the power-profile fraction at fuel level x (clamped)."""
        return float(np.interp(x, self.pb_fuel, self.pb_value))

    def resource_weeks(self, ha: int) -> list[int]:
        """Weeks in which this outage uses resources when it starts at ha."""
        weeks = set()
        for off, dur in self.resource_windows:
            weeks.update(range(ha + off, ha + off + dur))
        return sorted(weeks)


@dataclass(frozen=True)
class Type2Plant:
    """Refuel-by-outage plant with an ordered list of cycles."""

    pmax: np.ndarray  # (T,)
    xi: float
    c_final: float
    cycles: tuple

    def __post_init__(self):
        pmax = np.asarray(self.pmax, dtype=np.float64)
        if pmax.ndim != 1:
            raise ModelError("type2: pmax must be a 1-d array over steps")
        if np.any(pmax < -TOL.bound_abs):
            raise ModelError("type2: pmax must be >= 0")
        if self.xi < 0:
            raise ModelError("type2: initial fuel xi must be >= 0")
        if len(self.cycles) < 1:
            raise ModelError("type2: at least one cycle is required")
        object.__setattr__(self, "pmax", _readonly(pmax))
        object.__setattr__(self, "cycles", tuple(self.cycles))

    @property
    def K(self) -> int:
        return len(self.cycles)


@dataclass(frozen=True)
class ScenarioSet:
    """Demand realizations plus the power-profile band tolerance."""

    S: int
    demand: np.ndarray  # (T, S)
    epsilon: float

    def __post_init__(self):
        dem = np.asarray(self.demand, dtype=np.float64)
        if self.S < 1 or dem.ndim != 2 or dem.shape[1] != self.S:
            raise ModelError("scenarios: demand must have shape (T, S) with S >= 1")
        if np.any(dem < -TOL.bound_abs):
            raise ModelError("scenarios: demand must be >= 0")
        if not (0 <= self.epsilon < 1):
            raise ModelError("scenarios: epsilon must lie in [0, 1)")
        object.__setattr__(self, "demand", _readonly(dem))


@dataclass(frozen=True)
class Separation:
    """Disjunctive temporal constraint, active when both outages intersect
    the week interval [week_lo, week_hi] (inclusive)."""

    a: tuple  # (plant, cycle)
    b: tuple
    se: int
    se_prime: int
    week_lo: int
    week_hi: int


@dataclass(frozen=True)
class MaxOffline:
    """At most `limit` of `outages` may be on outage in week `week`."""

    week: int
    outages: tuple
    limit: int


@dataclass(frozen=True)
class Resource:
    """At most `capacity` of `outages` may use resources in any one week."""

    outages: tuple
    capacity: int


@dataclass(frozen=True)
class OfflineCapacity:
    """Offline pmax of `plants` may not exceed `imax` at any step of `weeks`."""

    plants: tuple
    imax: float
    weeks: tuple


@dataclass(frozen=True)
class CouplingConstraints:
    separations: tuple = ()
    max_offline: tuple = ()
    resources: tuple = ()
    offline_capacity: tuple = ()


@dataclass(frozen=True)
class Instance:
    """Full problem data."""

    grid: TimeGrid
    type1: tuple
    type2: tuple
    scenarios: ScenarioSet
    coupling: CouplingConstraints

    def __post_init__(self):
        T, S = self.grid.T, self.scenarios.S
        if self.scenarios.demand.shape != (T, S):
            raise ModelError("instance: demand shape inconsistent with grid")
        for j, p in enumerate(self.type1):
            if p.pmax.shape != (T, S):
                raise ModelError(f"instance: type1[{j}] arrays inconsistent with (T, S)")
        for i, p in enumerate(self.type2):
            if p.pmax.shape != (T,):
                raise ModelError(f"instance: type2[{i}] pmax inconsistent with T")
            for k, c in enumerate(p.cycles):
                for w, bound in (("to", c.to), ("ta", c.ta)):
                    if bound is not None and not (0 <= bound < self.grid.H):
                        raise ModelError(f"instance: type2[{i}].cycles[{k}].{w} outside weeks")
        self._check_refs()
        object.__setattr__(self, "type1", tuple(self.type1))
        object.__setattr__(self, "type2", tuple(self.type2))

    def _check_refs(self):
        def ok_outage(o):
            i, k = o
            return 0 <= i < self.I and 0 <= k < self.type2[i].K

        for c in self.coupling.separations:
            if not (ok_outage(c.a) and ok_outage(c.b)):
                raise ModelError("coupling: separation references unknown outage")
            if not (0 <= c.week_lo <= c.week_hi < self.grid.H):
                raise ModelError("coupling: separation interval outside weeks")
        for c in self.coupling.max_offline:
            if c.limit < 0 or not (0 <= c.week < self.grid.H):
                raise ModelError("coupling: max_offline week/limit invalid")
            if not all(ok_outage(o) for o in c.outages):
                raise ModelError("coupling: max_offline references unknown outage")
        for c in self.coupling.resources:
            if c.capacity < 0 or not all(ok_outage(o) for o in c.outages):
                raise ModelError("coupling: resource constraint invalid")
        for c in self.coupling.offline_capacity:
            if c.imax < 0 or not all(0 <= i < self.I for i in c.plants):
                raise ModelError("coupling: offline_capacity constraint invalid")
            if not all(0 <= h < self.grid.H for h in c.weeks):
                raise ModelError("coupling: offline_capacity week outside horizon")

    @property
    def I(self) -> int:
        return len(self.type2)

    @property
    def J(self) -> int:
        return len(self.type1)


class Schedule:
    """Shared decisions: start week ha(i, k) and refuel amount r(i, k).

    ``ha`` keeps the -1 sentinel of the external file format; all access in
    solver code goes through scheduled()/scheduled_mask() so no arithmetic
    is ever done on the sentinel.
    """

    def __init__(self, ha: Sequence[Sequence[int]], r: Sequence[Sequence[float]]):
        self.ha = [np.asarray(row, dtype=np.int64).copy() for row in ha]
        self.r = [np.asarray(row, dtype=np.float64).copy() for row in r]
        if len(self.ha) != len(self.r) or any(
            a.shape != b.shape for a, b in zip(self.ha, self.r)
        ):
            raise ModelError("schedule: ha and r shapes differ")

    @staticmethod
    def empty(instance: Instance) -> "Schedule":
        return Schedule(
            [[UNSCHEDULED] * p.K for p in instance.type2],
            [[0.0] * p.K for p in instance.type2],
        )

    def scheduled(self, i: int, k: int) -> bool:
        return self.ha[i][k] != UNSCHEDULED

    def scheduled_mask(self, i: int) -> np.ndarray:
        return self.ha[i] != UNSCHEDULED

    def copy(self) -> "Schedule":
        return Schedule(self.ha, self.r)

    def with_week(self, i: int, k: int, week: int) -> "Schedule":
        """Copy with one outage moved; other plant rows are shared."""
        s = Schedule.__new__(Schedule)
        s.ha = list(self.ha)
        s.r = list(self.r)
        s.ha[i] = self.ha[i].copy()
        s.ha[i][k] = week
        return s

    def validate(self, instance: Instance) -> None:
        """Raise ModelError unless the structural schedule invariants hold."""
        if len(self.ha) != instance.I:
            raise ModelError("schedule: row count != number of type 2 plants")
        for i, plant in enumerate(instance.type2):
            if self.ha[i].shape != (plant.K,):
                raise ModelError(f"schedule: plant {i} row length != K")
            prev_end = None
            seen_unscheduled = False
            for k, cyc in enumerate(plant.cycles):
                if not self.scheduled(i, k):
                    seen_unscheduled = True
                    if abs(self.r[i][k]) > TOL.bound_abs:
                        raise ModelError(
                            f"schedule: plant {i} cycle {k} unscheduled but r != 0"
                        )
                    continue
                if seen_unscheduled:
                    raise ModelError(
                        f"schedule: plant {i} cycle {k} scheduled after an unscheduled one"
                    )
                w = int(self.ha[i][k])
                if not (0 <= w and w + cyc.da <= instance.grid.H):
                    raise ModelError(f"schedule: plant {i} cycle {k} outage leaves horizon")
                if prev_end is not None and w < prev_end:
                    raise ModelError(f"schedule: plant {i} outages {k-1},{k} overlap")
                prev_end = w + cyc.da


@dataclass
class ProductionState:
    """Production and fuel trajectories for one scenario (or the
    minimum-demand scenario).  p rows: type 1 plants first, then type 2."""

    p: np.ndarray  # (J + I, T)
    x: np.ndarray  # (I, T + 1)


@dataclass(frozen=True)
class Interval:
    """Half-open step interval [start, stop) tagged with a cycle index."""

    cycle: int
    start: int
    stop: int

    def steps(self) -> range:
        return range(self.start, self.stop)


@dataclass(frozen=True)
class PlantTimeline:
    """Outage and campaign step intervals for one plant.

    Campaign intervals partition [0, T) together with the outage intervals;
    the campaign before the first scheduled outage carries cycle index -1.
    """

    outages: tuple    # Interval per scheduled cycle
    campaigns: tuple  # Interval per campaign (cycle -1 first)


def derive_campaigns(instance: Instance, schedule: Schedule) -> list[PlantTimeline]:
    """Unfold ea(i, k) / ec(i, k) step intervals from a schedule."""
    schedule.validate(instance)
    ws = instance.grid.week_start
    T = instance.grid.T
    out = []
    for i, plant in enumerate(instance.type2):
        outages = []
        campaigns = []
        cursor = 0
        prev_cycle = -1
        for k, cyc in enumerate(plant.cycles):
            if not schedule.scheduled(i, k):
                break
            w = int(schedule.ha[i][k])
            lo, hi = int(ws[w]), int(ws[w + cyc.da])
            if lo < cursor:
                raise ModelError(f"schedule: plant {i} outage {k} overlaps previous")
            campaigns.append(Interval(prev_cycle, cursor, lo))
            outages.append(Interval(k, lo, hi))
            cursor = hi
            prev_cycle = k
        campaigns.append(Interval(prev_cycle, cursor, T))
        out.append(PlantTimeline(tuple(outages), tuple(campaigns)))
    return out


def instances_equal(a: Instance, b: Instance) -> bool:
    """Field-for-field equality (used by the round-trip property)."""
    if (a.grid.T, a.grid.H, a.grid.D) != (b.grid.T, b.grid.H, b.grid.D):
        return False
    if not np.array_equal(a.grid.week_of_step, b.grid.week_of_step):
        return False
    if a.I != b.I or a.J != b.J or a.scenarios.S != b.scenarios.S:
        return False
    if a.scenarios.epsilon != b.scenarios.epsilon:
        return False
    if not np.array_equal(a.scenarios.demand, b.scenarios.demand):
        return False
    for p, q in zip(a.type1, b.type1):
        if not (
            np.array_equal(p.pmin, q.pmin)
            and np.array_equal(p.pmax, q.pmax)
            and np.array_equal(p.cost, q.cost)
        ):
            return False
    for p, q in zip(a.type2, b.type2):
        if not np.array_equal(p.pmax, q.pmax):
            return False
        if (p.xi, p.c_final, p.K) != (q.xi, q.c_final, q.K):
            return False
        for c, d in zip(p.cycles, q.cycles):
            scal = ("da", "to", "ta", "rmin", "rmax", "q", "qprime", "amax",
                    "smax", "bo", "mmax", "c_refuel", "resource_windows")
            if any(getattr(c, f) != getattr(d, f) for f in scal):
                return False
            if not (
                np.array_equal(c.pb_fuel, d.pb_fuel)
                and np.array_equal(c.pb_value, d.pb_value)
            ):
                return False
    return a.coupling == b.coupling
