"""Phase 1: construct a feasible maintenance schedule.

Depth-first backtracking over (scheduled-flag, start week, discretized
refuel) per outage with constraint propagation.  Scheduling constraints
(start-week bounds, separations, offline counts, resources, offline
capacity, outage order) are handled exactly; the fuel-level bounds use the
accumulated max-production approximation.  Branch and bound minimizes the
surrogate offline-capacity objective.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import TOL, Instance, ModelError, Schedule, UNSCHEDULED

STATUS_FEASIBLE = "feasible"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNKNOWN = "unknown"

_MAX_REFUEL_VALUES = 4096


@dataclass
class SearchConfig:
    refuel_quantum: float = 1000.0
    time_budget: float = 600.0
    rng_seed: int = 0
    bnb: bool = True
    max_nodes: Optional[int] = None  # hard cap; makes runs reproducible

    def __post_init__(self):
        if self.refuel_quantum <= 0:
            raise ValueError("refuel_quantum must be > 0")
        if self.time_budget <= 0:
            raise ValueError("time_budget must be > 0")


@dataclass
class SchedulerResult:
    status: str
    schedule: Optional[Schedule]
    surrogate: Optional[float]
    nodes: int
    elapsed: float


# ---------------------------------------------------------------------------
# Fuel-level approximation
# ---------------------------------------------------------------------------


def accumulate_beta(plant, grid) -> np.ndarray:
    """beta[h]: fuel burned in the first h weeks at maximum production."""
    weekly = np.array(
        [plant.pmax[grid.week_start[h] : grid.week_start[h + 1]].sum() for h in range(grid.H)]
    )
    return np.concatenate(([0.0], np.cumsum(grid.D * weekly)))


def fb_adjusted(fi: float, bo: float) -> float:
    """Profile-adjusted pre-outage fuel estimate (identity for fi >= bo,
    linear below, clamped so the run-dry level -bo maps to zero)."""
    return max(0.0, fi + 0.5 * max(0.0, min(2.0 * bo, bo - fi)))


def fa_after(fb: float, cyc) -> float:
    """Estimated fuel right after the outage, given its refuel amount."""
    return cyc.q * fb + cyc.qprime  # caller adds the refuel


@dataclass
class FuelChain:
    """Per-cycle fuel estimates for one plant."""

    fu: np.ndarray
    fi: np.ndarray
    fb: np.ndarray
    fa: np.ndarray


def estimate_fuel_chain(plant, ha_row, r_row, beta) -> FuelChain:
    """Chain FU -> FI -> FB -> FA along one plant's cycles."""
    K = plant.K
    fu = np.zeros(K)
    fi = np.zeros(K)
    fb = np.zeros(K)
    fa = np.zeros(K)
    prev_available = plant.xi
    prev_consumed = 0.0  # beta at the end of the previous outage
    for k, cyc in enumerate(plant.cycles):
        if ha_row[k] == UNSCHEDULED:
            fu[k] = 0.0
            fi[k] = prev_available
            fb[k] = 0.0
            fa[k] = prev_available
            continue
        w = int(ha_row[k])
        fu[k] = beta[w] - prev_consumed
        fi[k] = prev_available - fu[k]
        fb[k] = fb_adjusted(fi[k], cyc.bo)
        fa[k] = cyc.q * fb[k] + r_row[k] + cyc.qprime
        prev_available = fa[k]
        prev_consumed = beta[w + cyc.da]
    return FuelChain(fu=fu, fi=fi, fb=fb, fa=fa)


def alpha_weekly(plant, grid) -> float:
    """Average maximal production per week, in fuel units."""
    return float(plant.pmax.sum()) / grid.H * grid.D


@dataclass
class FuelEstimate:
    """Instance-wide fuel approximation state."""

    beta: list
    chains: list
    alpha: np.ndarray
    k_last: np.ndarray


def estimate_fuel(instance: Instance, schedule: Schedule) -> FuelEstimate:
    beta = [accumulate_beta(p, instance.grid) for p in instance.type2]
    chains = [
        estimate_fuel_chain(p, schedule.ha[i], schedule.r[i], beta[i])
        for i, p in enumerate(instance.type2)
    ]
    alpha = np.array([alpha_weekly(p, instance.grid) for p in instance.type2])
    k_last = np.array(
        [int(schedule.scheduled_mask(i).sum()) - 1 for i in range(instance.I)],
        dtype=np.int64,
    )
    return FuelEstimate(beta=beta, chains=chains, alpha=alpha, k_last=k_last)


def surrogate_objective(instance: Instance, schedule: Schedule, est: FuelEstimate) -> float:
    """Estimated offline type-2 capacity: dry weeks before the first outage,
    between outages, and after the last one, each clamped at zero and scaled
    by the plant's average weekly production."""
    H = instance.grid.H
    total = 0.0
    for i, plant in enumerate(instance.type2):
        a = est.alpha[i]
        if a <= 0:
            continue
        kl = int(est.k_last[i])
        if kl < 0:
            total += a * max(0.0, H - plant.xi / a)
            continue
        chain = est.chains[i]
        total += a * max(0.0, schedule.ha[i][0] - plant.xi / a)
        for k in range(1, plant.K):
            if not schedule.scheduled(i, k):
                continue
            gap_start = schedule.ha[i][k - 1] + plant.cycles[k - 1].da
            total += a * max(0.0, schedule.ha[i][k] - gap_start - chain.fa[k - 1] / a)
        end_last = schedule.ha[i][kl] + plant.cycles[kl].da
        total += a * max(0.0, H - end_last - chain.fa[kl] / a)
    return total


def refuel_values(cyc, quantum: float) -> np.ndarray:
    """Quantized refuel domain: multiples of the quantum clipped into
    [rmin, rmax], largest first."""
    lo = math.floor(cyc.rmin / quantum)
    hi = math.ceil(cyc.rmax / quantum)
    if hi - lo > _MAX_REFUEL_VALUES:
        raise ValueError(
            f"refuel_quantum {quantum} yields {hi - lo} values for bounds "
            f"[{cyc.rmin}, {cyc.rmax}]; use a coarser quantum"
        )
    vals = {min(max(m * quantum, cyc.rmin), cyc.rmax) for m in range(lo, hi + 1)}
    return np.array(sorted(vals, reverse=True))


# ---------------------------------------------------------------------------
# Search engine
# ---------------------------------------------------------------------------

_SIG_UNKNOWN, _SIG_NO, _SIG_YES = -1, 0, 1


class _Engine:
    """Hand-rolled CP search: boolean week domains, trail-based undo,
    incident-constraint checking at assignment, saturation pruning."""

    def __init__(self, instance: Instance, config: SearchConfig):
        self.inst = instance
        self.cfg = config
        self.grid = instance.grid
        H, T = self.grid.H, self.grid.T

        rng = np.random.default_rng(config.rng_seed)
        self.rho = rng.permutation(instance.I)
        kmax = max(p.K for p in instance.type2)
        self.order = [
            (int(i), k)
            for k in range(kmax)
            for i in self.rho
            if k < instance.type2[i].K
        ]

        self.beta = [accumulate_beta(p, self.grid) for p in instance.type2]
        self.alpha = [alpha_weekly(p, self.grid) for p in instance.type2]
        # per-plant scalar state lives in plain lists (hot in the search)
        self.sigma = [[_SIG_UNKNOWN] * p.K for p in instance.type2]
        self.ha = [[UNSCHEDULED] * p.K for p in instance.type2]
        self.rr = [[0.0] * p.K for p in instance.type2]
        self.fb_chain = [[0.0] * p.K for p in instance.type2]
        self.fa_known = [[False] * p.K for p in instance.type2]
        self.fa_chain = [[0.0] * p.K for p in instance.type2]
        self.r_values = [
            [refuel_values(c, config.refuel_quantum) for c in p.cycles]
            for p in instance.type2
        ]

        # an outage with a defined upper start bound must be scheduled,
        # hence so must every earlier outage of the same plant
        self.mandatory = []
        for p in instance.type2:
            m = [c.ta is not None for c in p.cycles]
            if any(m):
                last = max(k for k, v in enumerate(m) if v)
                m[: last + 1] = [True] * (last + 1)
            self.mandatory.append(m)

        self.dom = []
        for i, p in enumerate(instance.type2):
            rows = []
            for k, c in enumerate(p.cycles):
                d = np.zeros(H, dtype=bool)
                lo = 0 if c.to is None else max(0, c.to)
                hi = (H - c.da) if c.ta is None else min(H - c.da, c.ta)
                if lo <= hi:
                    d[lo : hi + 1] = True
                rows.append(d)
            self.dom.append(rows)

        # coupling bookkeeping
        cpl = instance.coupling
        self.sep_by_var = {}
        for ci, c in enumerate(cpl.separations):
            self.sep_by_var.setdefault(c.a, []).append((ci, c.b, False))
            self.sep_by_var.setdefault(c.b, []).append((ci, c.a, True))
        self.mo_by_var = {}
        self.mo_count = np.zeros(len(cpl.max_offline), dtype=np.int64)
        for ci, c in enumerate(cpl.max_offline):
            for o in c.outages:
                self.mo_by_var.setdefault(o, []).append(ci)
        self.res_by_var = {}
        self.res_usage = [np.zeros(H + 64, dtype=np.int64) for _ in cpl.resources]
        for ci, c in enumerate(cpl.resources):
            for o in c.outages:
                self.res_by_var.setdefault(o, []).append(ci)
        self.cap_by_plant = {}
        self.cap_load = []
        self.cap_steps = []
        for ci, c in enumerate(cpl.offline_capacity):
            self.cap_load.append(np.zeros(T))
            mask = np.zeros(T, dtype=bool)
            for h in c.weeks:
                mask[self.grid.week_start[h] : self.grid.week_start[h + 1]] = True
            self.cap_steps.append(mask)
            for i in c.plants:
                self.cap_by_plant.setdefault(i, []).append(ci)

        self._static_capacity_blocks()

        self.trail = []
        self.nodes = 0
        self.best_schedule = None
        self.best_surrogate = math.inf
        self.incumbents = []  # accepted surrogate values, in order
        self.aborted = False
        self.stop_at_first = not config.bnb
        self.deadline = None

    # -- static pruning ----------------------------------------------------

    def _static_capacity_blocks(self):
        """Remove weeks where placing an outage alone already breaks an
        offline-capacity limit."""
        for i, plant in enumerate(self.inst.type2):
            for ci in self.cap_by_plant.get(i, ()):
                c = self.inst.coupling.offline_capacity[ci]
                mask = self.cap_steps[ci]
                for k, cyc in enumerate(plant.cycles):
                    dom = self.dom[i][k]
                    for w in np.nonzero(dom)[0]:
                        lo = self.grid.week_start[w]
                        hi = self.grid.week_start[w + cyc.da]
                        steps = np.arange(lo, hi)[mask[lo:hi]]
                        if steps.size and np.any(plant.pmax[steps] > c.imax + TOL.bound_abs):
                            dom[w] = False

    # -- trail -------------------------------------------------------------

    def _undo_to(self, mark):
        while len(self.trail) > mark:
            op = self.trail.pop()
            tag = op[0]
            if tag == "dom":
                _, i, k, w = op
                self.dom[i][k][w] = True
            elif tag == "sig":
                _, i, k, old = op
                self.sigma[i][k] = old
            elif tag == "week":
                _, i, k = op
                self.ha[i][k] = UNSCHEDULED
            elif tag == "ref":
                _, i, k = op
                self.rr[i][k] = 0.0
                self.fa_known[i][k] = False
            elif tag == "mo":
                _, ci = op
                self.mo_count[ci] -= 1
            elif tag == "res":
                _, ci, h = op
                self.res_usage[ci][h] -= 1
            elif tag == "cap":
                _, ci, lo, hi, i = op
                self.cap_load[ci][lo:hi] -= self.inst.type2[i].pmax[lo:hi]

    def _set_sigma(self, i, k, val):
        self.trail.append(("sig", i, k, int(self.sigma[i][k])))
        self.sigma[i][k] = val

    def _prune_week(self, i, k, w):
        if self.dom[i][k][w]:
            self.dom[i][k][w] = False
            self.trail.append(("dom", i, k, w))

    # -- geometry helpers ----------------------------------------------------

    def _active(self, i, k, w, h) -> bool:
        return w <= h < w + self.inst.type2[i].cycles[k].da

    def _span_hits(self, w, da, lo, hi) -> bool:
        return w <= hi and w + da - 1 >= lo

    def _sep_violated(self, c, w_a, w_b, da_a, da_b) -> bool:
        if not (
            self._span_hits(w_a, da_a, c.week_lo, c.week_hi)
            and self._span_hits(w_b, da_b, c.week_lo, c.week_hi)
        ):
            return False
        diff = w_a - w_b
        return diff < c.se and -diff < c.se_prime

    # -- fuel chain ----------------------------------------------------------

    def _chain_inputs(self, i, k):
        """(available fuel before the campaign, beta consumed at its start)."""
        if k == 0:
            return self.inst.type2[i].xi, 0.0
        prev = self.inst.type2[i].cycles[k - 1]
        w_prev = int(self.ha[i][k - 1])
        return self.fa_chain[i][k - 1], self.beta[i][w_prev + prev.da]

    def _fb_at(self, i, k, w):
        avail, consumed = self._chain_inputs(i, k)
        fu = self.beta[i][w] - consumed
        fi = avail - fu
        return fb_adjusted(fi, self.inst.type2[i].cycles[k].bo)

    # -- assignment checking -------------------------------------------------

    def _week_ok(self, i, k, w, check_fuel: bool = True) -> bool:
        inst = self.inst
        cyc = inst.type2[i].cycles[k]
        if k > 0 and w < self.ha[i][k - 1] + inst.type2[i].cycles[k - 1].da:
            return False
        if check_fuel and self._fb_at(i, k, w) > cyc.amax + TOL.bound_abs:
            return False
        for ci, partner, flipped in self.sep_by_var.get((i, k), ()):
            pi, pk = partner
            if self.sigma[pi][pk] != _SIG_YES or self.ha[pi][pk] == UNSCHEDULED:
                continue
            c = inst.coupling.separations[ci]
            wp = int(self.ha[pi][pk])
            da_p = inst.type2[pi].cycles[pk].da
            if flipped:
                bad = self._sep_violated(c, wp, w, da_p, cyc.da)
            else:
                bad = self._sep_violated(c, w, wp, cyc.da, da_p)
            if bad:
                return False
        for ci in self.mo_by_var.get((i, k), ()):
            c = inst.coupling.max_offline[ci]
            if self._active(i, k, w, c.week) and self.mo_count[ci] + 1 > c.limit:
                return False
        for ci in self.res_by_var.get((i, k), ()):
            c = inst.coupling.resources[ci]
            for h in cyc.resource_weeks(w):
                if 0 <= h < len(self.res_usage[ci]) and self.res_usage[ci][h] + 1 > c.capacity:
                    return False
        for ci in self.cap_by_plant.get(i, ()):
            c = inst.coupling.offline_capacity[ci]
            lo = self.grid.week_start[w]
            hi = self.grid.week_start[w + cyc.da]
            seg = slice(lo, hi)
            load = self.cap_load[ci][seg][self.cap_steps[ci][seg]]
            pm = inst.type2[i].pmax[seg][self.cap_steps[ci][seg]]
            if load.size and np.any(load + pm > c.imax + TOL.bound_abs):
                return False
        return True

    def _commit_week(self, i, k, w) -> bool:
        """Record the assignment, update counters, prune neighbours.
        Returns False when pruning wipes out a must-schedule partner."""
        inst = self.inst
        cyc = inst.type2[i].cycles[k]
        self.ha[i][k] = w
        self.trail.append(("week", i, k))
        self.fb_chain[i][k] = self._fb_at(i, k, w)

        # order bound: next cycle of the same plant cannot start earlier
        if k + 1 < inst.type2[i].K:
            for wbad in range(0, min(w + cyc.da, self.grid.H)):
                self._prune_week(i, k + 1, wbad)

        for ci, partner, flipped in self.sep_by_var.get((i, k), ()):
            pi, pk = partner
            if self.ha[pi][pk] != UNSCHEDULED or self.sigma[pi][pk] == _SIG_NO:
                continue
            c = inst.coupling.separations[ci]
            da_p = inst.type2[pi].cycles[pk].da
            for wp in np.nonzero(self.dom[pi][pk])[0]:
                # flipped: (i, k) is the constraint's b side, partner its a side
                if flipped:
                    bad = self._sep_violated(c, wp, w, da_p, cyc.da)
                else:
                    bad = self._sep_violated(c, w, wp, cyc.da, da_p)
                if bad:
                    self._prune_week(pi, pk, wp)
            if not self._maybe_ok(pi, pk):
                return False

        for ci in self.mo_by_var.get((i, k), ()):
            c = inst.coupling.max_offline[ci]
            if self._active(i, k, w, c.week):
                self.mo_count[ci] += 1
                self.trail.append(("mo", ci))
                if self.mo_count[ci] == c.limit:
                    for (pi, pk) in c.outages:
                        if self.ha[pi][pk] != UNSCHEDULED or self.sigma[pi][pk] == _SIG_NO:
                            continue
                        da_p = inst.type2[pi].cycles[pk].da
                        for wp in range(max(0, c.week - da_p + 1), c.week + 1):
                            if wp < self.grid.H:
                                self._prune_week(pi, pk, wp)
                        if not self._maybe_ok(pi, pk):
                            return False

        for ci in self.res_by_var.get((i, k), ()):
            c = inst.coupling.resources[ci]
            saturated = []
            for h in cyc.resource_weeks(w):
                if 0 <= h < len(self.res_usage[ci]):
                    self.res_usage[ci][h] += 1
                    self.trail.append(("res", ci, h))
                    if self.res_usage[ci][h] == c.capacity:
                        saturated.append(h)
            for h in saturated:
                for (pi, pk) in c.outages:
                    if self.ha[pi][pk] != UNSCHEDULED or self.sigma[pi][pk] == _SIG_NO:
                        continue
                    pcyc = inst.type2[pi].cycles[pk]
                    for off, dur in pcyc.resource_windows:
                        for wp in range(h - off - dur + 1, h - off + 1):
                            if 0 <= wp < self.grid.H:
                                self._prune_week(pi, pk, wp)
                    if not self._maybe_ok(pi, pk):
                        return False

        for ci in self.cap_by_plant.get(i, ()):
            lo = self.grid.week_start[w]
            hi = self.grid.week_start[w + cyc.da]
            self.cap_load[ci][lo:hi] += inst.type2[i].pmax[lo:hi]
            self.trail.append(("cap", ci, int(lo), int(hi), i))
            c = inst.coupling.offline_capacity[ci]
            for pi in c.plants:
                p_plant = inst.type2[pi]
                for pk in range(p_plant.K):
                    if self.ha[pi][pk] != UNSCHEDULED or self.sigma[pi][pk] == _SIG_NO:
                        continue
                    da_p = p_plant.cycles[pk].da
                    for wp in np.nonzero(self.dom[pi][pk])[0]:
                        slo = self.grid.week_start[wp]
                        shi = self.grid.week_start[wp + da_p]
                        seg = slice(slo, shi)
                        m = self.cap_steps[ci][seg]
                        if m.any() and np.any(
                            self.cap_load[ci][seg][m] + p_plant.pmax[seg][m]
                            > c.imax + TOL.bound_abs
                        ):
                            self._prune_week(pi, pk, wp)
                    if not self._maybe_ok(pi, pk):
                        return False
        return True

    def _maybe_ok(self, i, k) -> bool:
        """After pruning: a must-schedule outage needs a nonempty domain."""
        must = self.mandatory[i][k] or self.sigma[i][k] == _SIG_YES
        return (not must) or bool(self.dom[i][k].any())

    # -- bound ---------------------------------------------------------------

    def _lower_bound(self) -> float:
        """Sum of the surrogate terms already determined by the current
        partial assignment; every term is nonnegative, so this bounds any
        completion from below."""
        H = self.grid.H
        total = 0.0
        for i, plant in enumerate(self.inst.type2):
            a = self.alpha[i]
            if a <= 0:
                continue
            sig = self.sigma[i]
            if sig[0] == _SIG_NO:
                total += a * max(0.0, H - plant.xi / a)
                continue
            ha = self.ha[i]
            fa = self.fa_chain[i]
            known = self.fa_known[i]
            if sig[0] == _SIG_YES and ha[0] != UNSCHEDULED:
                total += a * max(0.0, ha[0] - plant.xi / a)
            decided = True
            kl = -1
            for k in range(plant.K):
                if sig[k] == _SIG_UNKNOWN:
                    decided = False
                elif sig[k] == _SIG_YES:
                    kl = k
                if (
                    k >= 1
                    and sig[k] == _SIG_YES
                    and ha[k] != UNSCHEDULED
                    and known[k - 1]
                ):
                    gap = ha[k] - (ha[k - 1] + plant.cycles[k - 1].da)
                    total += a * max(0.0, gap - fa[k - 1] / a)
            if decided and kl >= 0 and known[kl]:
                end = ha[kl] + plant.cycles[kl].da
                total += a * max(0.0, H - end - fa[kl] / a)
        return total

    # -- main search ---------------------------------------------------------

    def _over_budget(self) -> bool:
        if self.cfg.max_nodes is not None and self.nodes >= self.cfg.max_nodes:
            self.aborted = True
            return True
        if self.nodes % 256 == 0 and time.monotonic() > self.deadline:
            if self.best_schedule is not None:
                self.aborted = True
                return True
            # §6.3 behaviour: keep searching until the first feasible solution
            self.stop_at_first = True
        return False

    def _record_solution(self) -> bool:
        # at a leaf everything is decided, so the bound is the exact value
        val = self._lower_bound()
        if val < self.best_surrogate:
            self.best_surrogate = val
            self.best_schedule = self._extract_schedule()
            self.incumbents.append(val)
        return self.stop_at_first

    def _extract_schedule(self) -> Schedule:
        ha, r = [], []
        for i in range(self.inst.I):
            keep = [s == _SIG_YES for s in self.sigma[i]]
            ha.append([w if m else UNSCHEDULED for w, m in zip(self.ha[i], keep)])
            r.append([v if m else 0.0 for v, m in zip(self.rr[i], keep)])
        return Schedule(ha, r)

    def _search(self, pos) -> bool:
        if pos == len(self.order):
            return self._record_solution()
        if (
            self.cfg.bnb
            and self.best_schedule is not None
            and not self.stop_at_first
            and self._lower_bound() >= self.best_surrogate - 1e-12
        ):
            return False
        i, k = self.order[pos]
        if self.sigma[i][k] == _SIG_NO:
            return self._search(pos + 1)

        inst = self.inst
        cyc = inst.type2[i].cycles[k]

        # sigma = 1 first: more scheduled outages
        if k == 0 or self.sigma[i][k - 1] == _SIG_YES:
            mark = len(self.trail)
            self._set_sigma(i, k, _SIG_YES)
            min_week = 0
            if k > 0:
                min_week = int(self.ha[i][k - 1]) + inst.type2[i].cycles[k - 1].da
            for w in np.nonzero(self.dom[i][k])[0]:
                if w < min_week:
                    continue
                self.nodes += 1
                if self._over_budget():
                    self._undo_to(mark)
                    return True
                if not self._week_ok(i, k, int(w)):
                    continue
                mark_w = len(self.trail)
                if self._commit_week(i, k, int(w)):
                    fb = self.fb_chain[i][k]
                    for r in self.r_values[i][k]:
                        fa = cyc.q * fb + r + cyc.qprime
                        if fa > cyc.smax + TOL.bound_abs:
                            continue
                        self.nodes += 1
                        if self._over_budget():
                            self._undo_to(mark)
                            return True
                        mark_r = len(self.trail)
                        self.rr[i][k] = r
                        self.fa_chain[i][k] = fa
                        self.fa_known[i][k] = True
                        self.trail.append(("ref", i, k))
                        if self._search(pos + 1):
                            return True
                        self._undo_to(mark_r)
                self._undo_to(mark_w)
            self._undo_to(mark)

        # sigma = 0: only when no later outage of this plant is mandatory
        if not self.mandatory[i][k]:
            mark = len(self.trail)
            ok = True
            for kk in range(k, inst.type2[i].K):
                if self.sigma[i][kk] == _SIG_YES:
                    ok = False
                    break
                if self.sigma[i][kk] == _SIG_UNKNOWN:
                    self._set_sigma(i, kk, _SIG_NO)
            if ok:
                if self._search(pos + 1):
                    return True
            self._undo_to(mark)
        return False

    def solve(self) -> SchedulerResult:
        start = time.monotonic()
        self.deadline = start + self.cfg.time_budget
        infeasible_now = False
        for i in range(self.inst.I):
            for k in range(self.inst.type2[i].K):
                if self.mandatory[i][k] and not self.dom[i][k].any():
                    infeasible_now = True
        if infeasible_now:
            return SchedulerResult(STATUS_INFEASIBLE, None, None, 0, time.monotonic() - start)
        self._search(0)
        elapsed = time.monotonic() - start
        if self.best_schedule is not None:
            return SchedulerResult(
                STATUS_FEASIBLE, self.best_schedule, self.best_surrogate, self.nodes, elapsed
            )
        if self.aborted:
            return SchedulerResult(STATUS_UNKNOWN, None, None, self.nodes, elapsed)
        return SchedulerResult(STATUS_INFEASIBLE, None, None, self.nodes, elapsed)

    # -- used by tests to verify propagation keeps a known solution ----------

    def replay(self, schedule: Schedule, check_fuel: bool = False) -> bool:
        """Walk the variable order assigning `schedule`'s values, asserting
        none of them has been pruned.  Returns False on the first value that
        propagation or checking would reject."""
        for (i, k) in self.order:
            cyc = self.inst.type2[i].cycles[k]
            if not schedule.scheduled(i, k):
                if self.sigma[i][k] == _SIG_YES or self.mandatory[i][k]:
                    return False
                if self.sigma[i][k] == _SIG_UNKNOWN:
                    for kk in range(k, self.inst.type2[i].K):
                        self._set_sigma(i, kk, _SIG_NO)
                continue
            if self.sigma[i][k] == _SIG_NO:
                return False
            w = int(schedule.ha[i][k])
            if not self.dom[i][k][w]:
                return False
            self._set_sigma(i, k, _SIG_YES)
            if not self._week_ok(i, k, w, check_fuel=check_fuel):
                return False
            if not self._commit_week(i, k, w):
                return False
            self.rr[i][k] = float(schedule.r[i][k])
            self.fa_chain[i][k] = cyc.q * self.fb_chain[i][k] + self.rr[i][k] + cyc.qprime
            self.fa_known[i][k] = True
        return True


def solve_schedule(instance: Instance, config: SearchConfig) -> SchedulerResult:
    """Find a feasible maintenance schedule minimizing the surrogate
    objective within the budget; prove infeasibility when the search space
    is exhausted."""
    return _Engine(instance, config).solve()
