"""1-in-3-SAT reduction harness.

Encodes a 3-literal-clause formula as a scheduling instance (one plant per
clause, one outage of one week, two weeks per variable) and decodes
schedules back to assignments.  Doubles as a correctness harness for the
scheduler: encoded-instance feasibility coincides with the existence of a
consistent choice of one designated literal per clause, i.e. with plain
satisfiability of the clause set, which is what the brute-force oracle in
the tests enumerates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    CouplingConstraints,
    Cycle,
    Instance,
    ModelError,
    OfflineCapacity,
    ScenarioSet,
    Schedule,
    Separation,
    TimeGrid,
    Type1Plant,
    Type2Plant,
)


class DecodeError(ValueError):
    """Schedule cannot be decoded to a verifying assignment."""


@dataclass(frozen=True)
class Formula:
    """Clauses of exactly three signed literals over variables 1..n."""

    n: int
    clauses: tuple

    def __post_init__(self):
        for c in self.clauses:
            if len(c) != 3:
                raise ModelError("formula: every clause needs exactly 3 literals")
            for lit in c:
                if lit == 0 or abs(lit) > self.n:
                    raise ModelError(f"formula: literal {lit} outside variables 1..{self.n}")
        object.__setattr__(self, "clauses", tuple(tuple(c) for c in self.clauses))

    @property
    def c(self) -> int:
        return len(self.clauses)


def literal_week(lit: int) -> int:
    """Week of a literal: variable v occupies weeks 2(v-1) and 2(v-1)+1."""
    v = abs(lit)
    return 2 * (v - 1) + (0 if lit > 0 else 1)


def assignment_satisfies(formula: Formula, assignment) -> bool:
    """Every clause has at least one true literal under the assignment."""
    for clause in formula.clauses:
        if not any(
            assignment[abs(lit) - 1] == (lit > 0) for lit in clause
        ):
            return False
    return True


def encode_1in3sat(formula: Formula) -> Instance:
    """Scheduling instance whose feasible schedules carry one designated
    true literal per clause.

    Per clause: a unit-capacity plant with a single mandatory one-week
    outage, blocked (offline capacity zero) everywhere except the clause's
    three literal weeks.  A two-week separation between each positive /
    negative occurrence pair of a variable, gated on the variable's week
    pair, stops complementary weeks from both being used.  Refuels are
    pinned to zero and fuel bounds to the initial stock, so fuel never
    constrains the schedule."""
    n, c = formula.n, formula.c
    H = T = 2 * n
    grid = TimeGrid.uniform(H, 1, D=1.0)
    xi = float(2 * n)

    plants = []
    caps = []
    for idx, clause in enumerate(formula.clauses):
        allowed = {literal_week(lit) for lit in clause}
        blocked = tuple(h for h in range(H) if h not in allowed)
        cyc = Cycle(
            da=1,
            to=0,
            ta=H - 1,
            rmin=0.0,
            rmax=0.0,
            q=0.5,
            qprime=0.0,
            amax=xi,
            smax=xi,
            bo=0.0,
            mmax=float(2 * n),
            pb_fuel=np.array([0.0]),
            pb_value=np.array([1.0]),
            c_refuel=1.0,
            resource_windows=((0, 1),),
        )
        plants.append(
            Type2Plant(pmax=np.ones(T), xi=xi, c_final=0.0, cycles=(cyc,))
        )
        if blocked:
            caps.append(OfflineCapacity(plants=(idx,), imax=0.0, weeks=blocked))

    seps = []
    seen = set()
    for a, ca in enumerate(formula.clauses):
        for b, cb in enumerate(formula.clauses):
            if a == b:
                continue
            for lit in ca:
                if lit > 0 and -lit in cb:
                    key = (a, b, lit)
                    if key in seen:
                        continue
                    seen.add(key)
                    w_pos = literal_week(lit)
                    seps.append(
                        Separation(
                            a=(a, 0),
                            b=(b, 0),
                            se=2,
                            se_prime=2,
                            week_lo=w_pos,
                            week_hi=w_pos + 1,
                        )
                    )

    type1 = (
        Type1Plant(
            pmin=np.zeros((T, 1)),
            pmax=np.full((T, 1), float(c)),
            cost=np.ones((T, 1)),
        ),
    )
    return Instance(
        grid=grid,
        type1=type1,
        type2=tuple(plants),
        scenarios=ScenarioSet(S=1, demand=np.full((T, 1), float(c)), epsilon=0.0),
        coupling=CouplingConstraints(
            separations=tuple(seps), offline_capacity=tuple(caps)
        ),
    )


def decode_assignment(formula: Formula, schedule: Schedule) -> list:
    """Read the designated literal of each clause off the schedule.

    Variables forced by some outage's week take that value; the rest
    default to false.  Raises DecodeError on partial schedules, on
    conflicting weeks, or when the result does not satisfy every clause."""
    if len(schedule.ha) != formula.c:
        raise DecodeError("schedule rows do not match clause count")
    values: dict[int, bool] = {}
    for i in range(formula.c):
        if not schedule.scheduled(i, 0):
            raise DecodeError(f"clause {i}: outage not scheduled")
        w = int(schedule.ha[i][0])
        v = w // 2 + 1
        positive = w % 2 == 0
        if v > formula.n:
            raise DecodeError(f"clause {i}: week {w} beyond the variable range")
        if values.get(v, positive) != positive:
            raise DecodeError(f"variable {v}: complementary weeks both used")
        values[v] = positive
        if literal_week((1 if positive else -1) * v) not in {
            literal_week(lit) for lit in formula.clauses[i]
        }:
            raise DecodeError(f"clause {i}: outage week {w} is not one of its literals")
    assignment = [values.get(v, False) for v in range(1, formula.n + 1)]
    if not assignment_satisfies(formula, assignment):
        raise DecodeError("decoded assignment does not satisfy the formula")
    return assignment


def random_formula(rng, n: int, c: int) -> Formula:
    """Random formula with three distinct variables per clause."""
    clauses = []
    for _ in range(c):
        vars_ = rng.choice(n, size=3, replace=False) + 1
        signs = rng.integers(0, 2, size=3) * 2 - 1
        clauses.append(tuple(int(v * s) for v, s in zip(vars_, signs)))
    return Formula(n=n, clauses=tuple(clauses))


def parse_clauses(text: str) -> Formula:
    """DIMACS-like input: optional 'p cnf n c' header, 'c' comment lines,
    clause lines of exactly three literals with an optional trailing 0."""
    n = 0
    clauses = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) >= 3:
                n = int(parts[2])
            continue
        lits = [int(v) for v in line.split()]
        if lits and lits[-1] == 0:
            lits = lits[:-1]
        if len(lits) != 3:
            raise ModelError(f"line {ln}: need exactly 3 literals per clause")
        clauses.append(tuple(lits))
        n = max(n, max(abs(v) for v in lits))
    if not clauses:
        raise ModelError("no clauses found")
    return Formula(n=n, clauses=tuple(clauses))
