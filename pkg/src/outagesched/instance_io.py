"""Instance/solution files and the random instance generator.

Files are UTF-8 JSON with a fixed key order and floats rendered at 9
significant digits, so writing the same data twice is byte-identical.
The generator builds a feasible witness schedule first and then samples
demand, fuel bounds, and coupling constraints around it, so every
generated instance is solvable by construction.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .model import (
    TOL,
    UNSCHEDULED,
    CouplingConstraints,
    Cycle,
    Instance,
    MaxOffline,
    ModelError,
    OfflineCapacity,
    Resource,
    ScenarioSet,
    Schedule,
    Separation,
    TimeGrid,
    Type1Plant,
    Type2Plant,
)
from .planner import fill_type1


class ParseError(ValueError):
    """Malformed instance or solution file."""


class GenerationError(ValueError):
    """Generator parameters admit no feasible instance."""


# ---------------------------------------------------------------------------
# Canonical JSON rendering
# ---------------------------------------------------------------------------


def _canon(x: float) -> float:
    return float(format(float(x), ".9g"))


def _canon_list(a) -> list:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1:
        return [_canon(v) for v in arr]
    return [_canon_list(row) for row in arr]


def _dump(obj) -> str:
    return json.dumps(obj, separators=(",", ":")) + "\n"


# ---------------------------------------------------------------------------
# Parsing helpers
# ---------------------------------------------------------------------------


def _req(d, key, path):
    if not isinstance(d, dict):
        raise ParseError(f"{path}: expected an object")
    if key not in d:
        raise ParseError(f"{path}: missing field '{key}'")
    return d[key]


def _num(v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"{path}: expected a number")
    return float(v)


def _int(v, path):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"{path}: expected an integer")
    return int(v)


def _opt_int(v, path):
    return None if v is None else _int(v, path)


def _matrix(v, path):
    try:
        arr = np.asarray(v, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise ParseError(f"{path}: expected a numeric array ({e})") from None
    return arr


def _pair_list(v, path):
    if not isinstance(v, list):
        raise ParseError(f"{path}: expected a list")
    out = []
    for n, item in enumerate(v):
        if not (isinstance(item, list) and len(item) == 2):
            raise ParseError(f"{path}[{n}]: expected a pair")
        out.append((_int(item[0], f"{path}[{n}][0]"), _int(item[1], f"{path}[{n}][1]")))
    return out


# ---------------------------------------------------------------------------
# Instance files
# ---------------------------------------------------------------------------


def parse_instance(data) -> Instance:
    """Parse and validate an instance file (str or bytes)."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None

    g = _req(doc, "grid", "$")
    try:
        grid = TimeGrid(
            T=_int(_req(g, "T", "grid"), "grid.T"),
            H=_int(_req(g, "H", "grid"), "grid.H"),
            D=_num(_req(g, "D", "grid"), "grid.D"),
            week_of_step=_matrix(_req(g, "week_of_step", "grid"), "grid.week_of_step").astype(np.int64),
        )
    except ModelError as e:
        raise ParseError(f"grid: {e}") from None

    type1 = []
    for j, p in enumerate(_req(doc, "type1", "$")):
        path = f"type1[{j}]"
        try:
            type1.append(
                Type1Plant(
                    pmin=_matrix(_req(p, "pmin", path), f"{path}.pmin"),
                    pmax=_matrix(_req(p, "pmax", path), f"{path}.pmax"),
                    cost=_matrix(_req(p, "cost", path), f"{path}.cost"),
                )
            )
        except ModelError as e:
            raise ParseError(f"{path}: {e}") from None

    type2 = []
    for i, p in enumerate(_req(doc, "type2", "$")):
        path = f"type2[{i}]"
        cycles = []
        for k, c in enumerate(_req(p, "cycles", path)):
            cpath = f"{path}.cycles[{k}]"
            pb = _matrix(_req(c, "pb", cpath), f"{cpath}.pb")
            if pb.ndim != 2 or pb.shape[1] != 2:
                raise ParseError(f"{cpath}.pb: expected [fuel, value] pairs")
            try:
                cycles.append(
                    Cycle(
                        da=_int(_req(c, "da", cpath), f"{cpath}.da"),
                        to=_opt_int(_req(c, "to", cpath), f"{cpath}.to"),
                        ta=_opt_int(_req(c, "ta", cpath), f"{cpath}.ta"),
                        rmin=_num(_req(c, "rmin", cpath), f"{cpath}.rmin"),
                        rmax=_num(_req(c, "rmax", cpath), f"{cpath}.rmax"),
                        q=_num(_req(c, "q", cpath), f"{cpath}.q"),
                        qprime=_num(_req(c, "qprime", cpath), f"{cpath}.qprime"),
                        amax=_num(_req(c, "amax", cpath), f"{cpath}.amax"),
                        smax=_num(_req(c, "smax", cpath), f"{cpath}.smax"),
                        bo=_num(_req(c, "bo", cpath), f"{cpath}.bo"),
                        mmax=_num(_req(c, "mmax", cpath), f"{cpath}.mmax"),
                        pb_fuel=pb[:, 0],
                        pb_value=pb[:, 1],
                        c_refuel=_num(_req(c, "c_refuel", cpath), f"{cpath}.c_refuel"),
                        resource_windows=tuple(_pair_list(_req(c, "resource_windows", cpath), f"{cpath}.resource_windows")),
                    )
                )
            except ModelError as e:
                raise ParseError(f"{cpath}: {e}") from None
        try:
            type2.append(
                Type2Plant(
                    pmax=_matrix(_req(p, "pmax", path), f"{path}.pmax"),
                    xi=_num(_req(p, "xi", path), f"{path}.xi"),
                    c_final=_num(_req(p, "c_final", path), f"{path}.c_final"),
                    cycles=tuple(cycles),
                )
            )
        except ModelError as e:
            raise ParseError(f"{path}: {e}") from None

    sc = _req(doc, "scenarios", "$")
    try:
        scenarios = ScenarioSet(
            S=_int(_req(sc, "S", "scenarios"), "scenarios.S"),
            demand=_matrix(_req(sc, "demand", "scenarios"), "scenarios.demand"),
            epsilon=_num(_req(sc, "epsilon", "scenarios"), "scenarios.epsilon"),
        )
    except ModelError as e:
        raise ParseError(f"scenarios: {e}") from None

    cp = _req(doc, "coupling", "$")
    seps = []
    for n, c in enumerate(_req(cp, "separations", "coupling")):
        path = f"coupling.separations[{n}]"
        iv = _req(c, "interval", path)
        if not (isinstance(iv, list) and len(iv) == 2):
            raise ParseError(f"{path}.interval: expected [lo, hi]")
        a = _pair_list([_req(c, "a", path)], f"{path}.a")[0]
        b = _pair_list([_req(c, "b", path)], f"{path}.b")[0]
        seps.append(
            Separation(
                a=a,
                b=b,
                se=_int(_req(c, "se", path), f"{path}.se"),
                se_prime=_int(_req(c, "se_prime", path), f"{path}.se_prime"),
                week_lo=_int(iv[0], f"{path}.interval[0]"),
                week_hi=_int(iv[1], f"{path}.interval[1]"),
            )
        )
    mos = []
    for n, c in enumerate(_req(cp, "max_offline", "coupling")):
        path = f"coupling.max_offline[{n}]"
        mos.append(
            MaxOffline(
                week=_int(_req(c, "week", path), f"{path}.week"),
                outages=tuple(_pair_list(_req(c, "outages", path), f"{path}.outages")),
                limit=_int(_req(c, "limit", path), f"{path}.limit"),
            )
        )
    ress = []
    for n, c in enumerate(_req(cp, "resources", "coupling")):
        path = f"coupling.resources[{n}]"
        ress.append(
            Resource(
                outages=tuple(_pair_list(_req(c, "outages", path), f"{path}.outages")),
                capacity=_int(_req(c, "capacity", path), f"{path}.capacity"),
            )
        )
    caps = []
    for n, c in enumerate(_req(cp, "offline_capacity", "coupling")):
        path = f"coupling.offline_capacity[{n}]"
        caps.append(
            OfflineCapacity(
                plants=tuple(_int(v, f"{path}.plants") for v in _req(c, "plants", path)),
                imax=_num(_req(c, "imax", path), f"{path}.imax"),
                weeks=tuple(_int(v, f"{path}.weeks") for v in _req(c, "weeks", path)),
            )
        )

    try:
        return Instance(
            grid=grid,
            type1=tuple(type1),
            type2=tuple(type2),
            scenarios=scenarios,
            coupling=CouplingConstraints(
                separations=tuple(seps),
                max_offline=tuple(mos),
                resources=tuple(ress),
                offline_capacity=tuple(caps),
            ),
        )
    except ModelError as e:
        raise ParseError(str(e)) from None


def write_instance(instance: Instance) -> str:
    """Canonical instance rendering (parse . write == identity)."""
    g = instance.grid
    doc = {
        "grid": {
            "T": g.T,
            "H": g.H,
            "D": _canon(g.D),
            "week_of_step": [int(w) for w in g.week_of_step],
        },
        "type1": [
            {
                "pmin": _canon_list(p.pmin),
                "pmax": _canon_list(p.pmax),
                "cost": _canon_list(p.cost),
            }
            for p in instance.type1
        ],
        "type2": [
            {
                "pmax": _canon_list(p.pmax),
                "xi": _canon(p.xi),
                "c_final": _canon(p.c_final),
                "cycles": [
                    {
                        "da": c.da,
                        "to": c.to,
                        "ta": c.ta,
                        "rmin": _canon(c.rmin),
                        "rmax": _canon(c.rmax),
                        "q": _canon(c.q),
                        "qprime": _canon(c.qprime),
                        "amax": _canon(c.amax),
                        "smax": _canon(c.smax),
                        "bo": _canon(c.bo),
                        "mmax": _canon(c.mmax),
                        "pb": [[_canon(a), _canon(b)] for a, b in zip(c.pb_fuel, c.pb_value)],
                        "c_refuel": _canon(c.c_refuel),
                        "resource_windows": [list(w) for w in c.resource_windows],
                    }
                    for c in p.cycles
                ],
            }
            for p in instance.type2
        ],
        "scenarios": {
            "S": instance.scenarios.S,
            "epsilon": _canon(instance.scenarios.epsilon),
            "demand": _canon_list(instance.scenarios.demand),
        },
        "coupling": {
            "separations": [
                {
                    "a": list(c.a),
                    "b": list(c.b),
                    "se": c.se,
                    "se_prime": c.se_prime,
                    "interval": [c.week_lo, c.week_hi],
                }
                for c in instance.coupling.separations
            ],
            "max_offline": [
                {"week": c.week, "outages": [list(o) for o in c.outages], "limit": c.limit}
                for c in instance.coupling.max_offline
            ],
            "resources": [
                {"outages": [list(o) for o in c.outages], "capacity": c.capacity}
                for c in instance.coupling.resources
            ],
            "offline_capacity": [
                {"plants": list(c.plants), "imax": _canon(c.imax), "weeks": list(c.weeks)}
                for c in instance.coupling.offline_capacity
            ],
        },
    }
    return _dump(doc)


# ---------------------------------------------------------------------------
# Solution files
# ---------------------------------------------------------------------------


def write_solution(instance: Instance, schedule: Schedule, productions, objective: float) -> str:
    """Canonical solution rendering; rejects malformed production arrays."""
    J, I, T, S = instance.J, instance.I, instance.grid.T, instance.scenarios.S
    if len(schedule.ha) != I:
        raise ModelError("solution: schedule row count != I")
    if len(productions) != S:
        raise ModelError("solution: need one production array per scenario")
    for s, pr in enumerate(productions):
        pr = np.asarray(pr)
        if pr.shape != (J + I, T):
            raise ModelError(f"solution: production[{s}] must have shape (J+I, T)")
        if not np.all(np.isfinite(pr)):
            raise ModelError(f"solution: production[{s}] contains a non-finite value")
        if np.any(pr < -TOL.bound_abs):
            raise ModelError(f"solution: production[{s}] contains a negative value")
    doc = {
        "ha": [[int(w) for w in row] for row in schedule.ha],
        "r": [_canon_list(row) for row in schedule.r],
        "production": [_canon_list(pr) for pr in productions],
        "objective": _canon(objective),
    }
    return _dump(doc)


def parse_solution(instance: Instance, data):
    """Parse a solution file against an instance; returns
    (schedule, productions, objective)."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
    ha = _req(doc, "ha", "$")
    r = _req(doc, "r", "$")
    if len(ha) != instance.I or len(r) != instance.I:
        raise ParseError("solution: ha/r row counts != I")
    schedule = Schedule(ha, r)
    prods = []
    raw = _req(doc, "production", "$")
    if len(raw) != instance.scenarios.S:
        raise ParseError("solution: production scenario count != S")
    for s, pr in enumerate(raw):
        arr = _matrix(pr, f"production[{s}]")
        if arr.shape != (instance.J + instance.I, instance.grid.T):
            raise ParseError(f"production[{s}]: expected shape (J+I, T)")
        prods.append(arr)
    return schedule, prods, _num(_req(doc, "objective", "$"), "objective")


# ---------------------------------------------------------------------------
# Random instance generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorParams:
    I: int = 4
    J: int = 2
    K: int = 2
    H: int = 20
    steps_per_week: int = 7
    S: int = 3
    demand_profile: tuple = (6.0, 3.0, 0.5)  # (base, amplitude, noise)
    constraint_density: float = 0.5
    seed: int = 0

    def __post_init__(self):
        for name in ("I", "J", "K", "H", "steps_per_week", "S"):
            if getattr(self, name) < 1:
                raise GenerationError(f"generator: {name} must be >= 1")
        if not (0 <= self.constraint_density <= 1):
            raise GenerationError("generator: constraint_density must lie in [0, 1]")
        if len(self.demand_profile) != 3:
            raise GenerationError("generator: demand_profile needs (base, amplitude, noise)")


def _witness_plant(rng, T, spw, D, H, K, seg):
    """One plant's data plus a feasible witness trajectory.

    The witness produces at pmax only while the post-production fuel level
    stays at or above the campaign threshold, so the declining profile and
    dry runs never occur on it."""
    pm = round(float(rng.uniform(4.0, 12.0)), 3)
    da = [int(rng.integers(1, min(2, seg - 2) + 1)) for _ in range(K)]
    ha = []
    prev_end = 0
    for k in range(K):
        lo = max(k * seg + 1, prev_end + 1)
        hi = (k + 1) * seg - da[k]
        w = int(rng.integers(lo, hi + 1)) if lo <= hi else max(lo, prev_end)
        ha.append(w)
        prev_end = w + da[k]

    bounds = []
    for k in range(K):
        to = max(0, ha[k] - int(rng.integers(0, 4)))
        ta = min(H - da[k], ha[k] + int(rng.integers(0, 4)))
        bounds.append((to, ta))

    # campaign step counts: before outage 0, then between/after outages
    camp_steps = [ha[0] * spw]
    for k in range(K):
        stop = ha[k + 1] * spw if k + 1 < K else T
        camp_steps.append(stop - (ha[k] + da[k]) * spw)

    q = [round(float(rng.uniform(0.6, 0.95)), 3) for _ in range(K)]
    qp = [round(float(rng.uniform(0.0, 3.0)), 3) for _ in range(K)]
    need = [pm * D * max(n, 1) for n in camp_steps]
    bo = [round(float(rng.uniform(0.0, 0.15)) * need[k + 1], 4) for k in range(K)]
    pb0 = [round(float(rng.uniform(0.3, 0.8)), 3) for _ in range(K)]
    xi = round(float(rng.uniform(0.55, 0.9)) * need[0] + bo[0], 6)
    target = [round(float(rng.uniform(0.55, 0.95)) * need[k + 1] + bo[k], 6) for k in range(K)]

    # simulate the witness, choosing refuels on the fly
    p = np.zeros(T)
    x = np.zeros(T + 1)
    x[0] = xi
    r_wit = [0.0] * K
    x_before = [0.0] * K
    x_after = [0.0] * K
    step_cam = np.zeros(T, dtype=np.int64)  # campaign index per step, -1 in outage
    cur_cam = 0
    k_next = 0
    t = 0
    while t < T:
        if k_next < K and t == ha[k_next] * spw:
            k = k_next
            x_before[k] = x[t]
            r_wit[k] = round(max(0.0, target[k] - q[k] * x[t] - qp[k]), 6)
            x[t + 1] = q[k] * x[t] + r_wit[k] + qp[k]
            x_after[k] = x[t + 1]
            step_cam[t] = -1
            for tt in range(t + 1, (ha[k] + da[k]) * spw):
                x[tt + 1] = x[tt]
                step_cam[tt] = -1
            t = (ha[k] + da[k]) * spw
            cur_cam = k + 1
            k_next += 1
            continue
        bo_c = bo[cur_cam - 1] if cur_cam > 0 else bo[0]
        step_cam[t] = cur_cam
        if x[t] >= bo_c + pm * D:
            p[t] = pm
        x[t + 1] = x[t] - p[t] * D
        t += 1

    # modulation booked by the witness's idle-above-threshold steps
    mod_wit = np.zeros(K + 1)
    for t in range(T):
        c = step_cam[t]
        if c >= 0:
            mod_wit[c] += (pm - p[t]) * D

    cycles = []
    for k in range(K):
        rmin = round(float(rng.uniform(0.3, 0.95)) * r_wit[k], 6)
        rmax = round(r_wit[k] * float(rng.uniform(1.05, 1.3)) + float(rng.uniform(1.0, 10.0)), 6)
        amax = round(x_before[k] + rmax * float(rng.uniform(0.8, 1.5)) + 5.0, 6)
        smax = round(x_after[k] + rmax * float(rng.uniform(0.8, 1.5)) + 5.0, 6)
        mm_need = mod_wit[k + 1] if k + 1 <= K else 0.0
        if k == 0:
            mm_need = max(mm_need, mod_wit[0])  # initial campaign borrows cycle 0
        mmax = round(mm_need + pm * D * spw * float(rng.uniform(1.5, 2.5)) + 1.0, 6)
        if bo[k] > 0:
            pb = ((0.0, pb0[k]), (bo[k], 1.0))
        else:
            pb = ((0.0, 1.0),)
        windows = [(0, da[k])]
        if rng.random() < 0.3 and ha[k] + da[k] < H:
            windows.append((da[k], 1))
        cycles.append(
            Cycle(
                da=da[k],
                to=bounds[k][0],
                ta=bounds[k][1],
                rmin=rmin,
                rmax=rmax,
                q=q[k],
                qprime=qp[k],
                amax=amax,
                smax=smax,
                bo=bo[k],
                mmax=mmax,
                pb_fuel=np.array([a for a, _ in pb]),
                pb_value=np.array([b for _, b in pb]),
                c_refuel=round(float(rng.uniform(1.0, 3.0)), 3),
                resource_windows=tuple(windows),
            )
        )
    plant = Type2Plant(
        pmax=np.full(T, pm),
        xi=xi,
        c_final=round(float(rng.uniform(0.1, 0.9)), 3),
        cycles=tuple(cycles),
    )
    return plant, ha, r_wit, p


def _sample_coupling(rng, params, plants2, witness_ha, grid):
    """Constraints sampled so the witness schedule satisfies all of them."""
    I, K, H = params.I, params.K, params.H
    density = params.constraint_density
    outages = [(i, k) for i in range(I) for k in range(K)]

    def wk(i, k):
        return witness_ha[i][k]

    def da(i, k):
        return plants2[i].cycles[k].da

    seps = []
    for _ in range(int(round(density * I * K))):
        (i1, k1), (i2, k2) = [outages[rng.integers(len(outages))] for _ in range(2)]
        if (i1, k1) == (i2, k2) or wk(i1, k1) == wk(i2, k2):
            continue
        if wk(i1, k1) > wk(i2, k2):
            (i1, k1), (i2, k2) = (i2, k2), (i1, k1)
        diff = wk(i2, k2) - wk(i1, k1)
        se_prime = int(rng.integers(1, diff + 1))
        se = int(rng.integers(1, 4))
        if rng.random() < 0.5:
            lo, hi = 0, H - 1
        else:
            lo = max(0, wk(i1, k1) - int(rng.integers(0, 3)))
            hi = min(H - 1, wk(i2, k2) + da(i2, k2) - 1 + int(rng.integers(0, 3)))
        seps.append(
            Separation(a=(i1, k1), b=(i2, k2), se=se, se_prime=se_prime, week_lo=lo, week_hi=hi)
        )

    mos = []
    for _ in range(int(round(density * I))):
        i0, k0 = outages[rng.integers(len(outages))]
        h = wk(i0, k0) + int(rng.integers(0, da(i0, k0)))
        size = int(rng.integers(2, min(5, len(outages)) + 1))
        idx = rng.choice(len(outages), size=size, replace=False)
        members = {outages[n] for n in idx} | {(i0, k0)}
        members = tuple(sorted(members))
        active = sum(1 for (i, k) in members if wk(i, k) <= h < wk(i, k) + da(i, k))
        mos.append(MaxOffline(week=h, outages=members, limit=max(1, active + int(rng.integers(0, 2)))))

    ress = []
    for _ in range(int(round(density * I))):
        size = int(rng.integers(2, min(5, len(outages)) + 1))
        idx = rng.choice(len(outages), size=size, replace=False)
        members = tuple(sorted(outages[n] for n in idx))
        usage = np.zeros(H + 64, dtype=np.int64)
        for (i, k) in members:
            for h in plants2[i].cycles[k].resource_weeks(wk(i, k)):
                if 0 <= h < len(usage):
                    usage[h] += 1
        ress.append(Resource(outages=members, capacity=int(usage.max()) + int(rng.integers(0, 2))))

    caps = []
    for _ in range(int(round(density * I))):
        size = int(rng.integers(1, I + 1))
        plants = tuple(sorted(int(v) for v in rng.choice(I, size=size, replace=False)))
        if rng.random() < 0.5:
            i0, k0 = outages[rng.integers(len(outages))]
            weeks = tuple(range(wk(i0, k0), min(H, wk(i0, k0) + da(i0, k0))))
        else:
            a = int(rng.integers(0, H))
            weeks = tuple(range(a, min(H, a + int(rng.integers(1, 5)))))
        worst = 0.0
        for h in weeks:
            for t in grid.steps_of_week(h):
                total = sum(
                    plants2[i].pmax[t]
                    for i in plants
                    if any(wk(i, k) <= h < wk(i, k) + da(i, k) for k in range(K))
                )
                worst = max(worst, total)
        imax = round(worst + float(rng.uniform(0.1, 4.0)), 4)
        caps.append(OfflineCapacity(plants=plants, imax=imax, weeks=weeks))

    return CouplingConstraints(
        separations=tuple(seps),
        max_offline=tuple(mos),
        resources=tuple(ress),
        offline_capacity=tuple(caps),
    )


def generate_instance(params: GeneratorParams):
    """Random desk-scale instance plus its feasible witness schedule."""
    K, H, spw = params.K, params.H, params.steps_per_week
    seg = H // K
    da_room = min(2, seg - 2)
    if seg < 4 or da_room < 1:
        raise GenerationError(f"generator: H={H} too small for K={K} cycles (need H >= 4*K)")

    rng = np.random.default_rng(params.seed)
    grid = TimeGrid.uniform(H, spw, D=1.0)
    T = grid.T

    plants2 = []
    witness_ha = []
    witness_r = []
    witness_p2 = np.zeros((params.I, T))
    for i in range(params.I):
        plant, ha, r_wit, p = _witness_plant(rng, T, spw, grid.D, H, K, seg)
        plants2.append(plant)
        witness_ha.append(ha)
        witness_r.append(r_wit)
        witness_p2[i] = p

    base, amplitude, noise = params.demand_profile
    p2_total = witness_p2.sum(axis=0)
    waves = int(rng.integers(2, 4))
    slack = np.zeros((T, params.S))
    for s in range(params.S):
        phase = 2.0 * math.pi * s / params.S
        wave = base + amplitude * np.sin(2.0 * math.pi * waves * np.arange(T) / T + phase)
        wave = wave + noise * rng.standard_normal(T)
        slack[:, s] = np.round(np.maximum(0.05, wave), 6)
    demand = np.round(p2_total[:, None] + slack, 6)

    max_dem = float(demand.max())
    type1 = []
    for j in range(params.J):
        cap = round(max_dem * 1.15 / params.J + 1.0, 6)
        cj = round(float(rng.uniform(1.5, 6.0)), 3)
        tt = np.arange(T)
        cost = np.zeros((T, params.S))
        for s in range(params.S):
            cost[:, s] = np.round(
                cj * (1.0 + 0.25 * np.sin(2.0 * math.pi * tt / T + 0.7 * j + 0.3 * s)), 6
            )
        type1.append(
            Type1Plant(pmin=np.zeros((T, params.S)), pmax=np.full((T, params.S), cap), cost=cost)
        )

    scenarios = ScenarioSet(S=params.S, demand=demand, epsilon=round(float(rng.uniform(0.02, 0.08)), 4))
    coupling = _sample_coupling(rng, params, plants2, witness_ha, grid)
    instance = Instance(
        grid=grid,
        type1=tuple(type1),
        type2=tuple(plants2),
        scenarios=scenarios,
        coupling=coupling,
    )
    schedule = Schedule(witness_ha, witness_r)
    schedule.validate(instance)
    return instance, schedule


def witness_productions(instance: Instance, schedule: Schedule):
    """Per-scenario productions for a witness schedule: the safe-greedy
    type-2 rule (never dip below the campaign threshold) plus the exact
    cheapest-first type-1 fill."""
    from .model import derive_campaigns

    T, D = instance.grid.T, instance.grid.D
    J, I, S = instance.J, instance.I, instance.scenarios.S
    timelines = derive_campaigns(instance, schedule)

    p2 = np.zeros((I, T))
    for i, plant in enumerate(instance.type2):
        bo_step = np.zeros(T)
        in_outage = np.zeros(T, dtype=bool)
        first = {}
        for iv in timelines[i].outages:
            in_outage[iv.start : iv.stop] = True
            first[iv.start] = iv.cycle
        for iv in timelines[i].campaigns:
            bo_step[iv.start : iv.stop] = plant.cycles[max(iv.cycle, 0)].bo
        x = plant.xi
        for t in range(T):
            if in_outage[t]:
                if t in first:
                    cyc = plant.cycles[first[t]]
                    x = cyc.q * x + schedule.r[i][first[t]] + cyc.qprime
                continue
            pm = plant.pmax[t]
            if x >= bo_step[t] + pm * D:
                p2[i, t] = pm
                x -= pm * D
    productions = []
    for s in range(S):
        pr = np.zeros((J + I, T))
        pr[J:] = p2
        for t in range(T):
            p1, residual = fill_type1(instance, t, s, float(p2[:, t].sum()))
            pr[:J, t] = p1
            if abs(residual) > TOL.bound_abs:
                raise ModelError(f"witness: demand not coverable at t={t}, s={s}")
        productions.append(pr)
    return productions
