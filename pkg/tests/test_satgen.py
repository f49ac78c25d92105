import numpy as np
import pytest

from outagesched import scheduler
from outagesched.model import ModelError, Schedule
from outagesched.satgen import (
    DecodeError,
    Formula,
    assignment_satisfies,
    decode_assignment,
    encode_1in3sat,
    literal_week,
    parse_clauses,
    random_formula,
)
from conftest import brute_force_satisfiable, scheduling_violations

FIGURE_FORMULA = Formula(n=4, clauses=((1, 2, -3), (-1, 2, 4)))


def solve_encoded(inst, seed=0):
    return scheduler.solve_schedule(
        inst, scheduler.SearchConfig(refuel_quantum=1.0, time_budget=30, rng_seed=seed)
    )


class TestFormula:
    def test_three_literals_enforced(self):
        with pytest.raises(ModelError):
            Formula(n=2, clauses=((1, 2),))

    def test_variable_range(self):
        with pytest.raises(ModelError):
            Formula(n=2, clauses=((1, 2, 5),))

    def test_parse_dimacs_like(self):
        f = parse_clauses("c comment\np cnf 4 2\n1 2 -3 0\n-1 2 4 0\n")
        assert f == FIGURE_FORMULA

    def test_parse_without_header(self):
        f = parse_clauses("1 2 -3\n-1 2 4\n")
        assert f.n == 4 and f.c == 2


class TestEncoding:
    def test_reference_dimensions(self):
        # two clauses over four variables: 2 plants, 8 weeks, single scenario
        inst = encode_1in3sat(FIGURE_FORMULA)
        assert inst.I == 2
        assert inst.grid.H == inst.grid.T == 8
        assert inst.scenarios.S == 1
        assert float(inst.scenarios.demand[0, 0]) == 2.0

    def test_reference_blocked_weeks(self):
        # blocked cells per clause: everything except its literal weeks
        inst = encode_1in3sat(FIGURE_FORMULA)
        blocked = {c.plants[0]: set(c.weeks) for c in inst.coupling.offline_capacity}
        allowed0 = {literal_week(l) for l in (1, 2, -3)}
        allowed1 = {literal_week(l) for l in (-1, 2, 4)}
        assert blocked[0] == set(range(8)) - allowed0 == {1, 3, 4, 6, 7}
        assert blocked[1] == set(range(8)) - allowed1 == {0, 3, 4, 5, 7}

    def test_reference_separation_pair(self):
        # x1 appears positively in clause 0 and negated in clause 1
        inst = encode_1in3sat(FIGURE_FORMULA)
        assert len(inst.coupling.separations) == 1
        sep = inst.coupling.separations[0]
        assert (sep.week_lo, sep.week_hi) == (0, 1)
        assert sep.se == sep.se_prime == 2

    def test_size_bound(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            f = random_formula(rng, n=int(rng.integers(3, 9)), c=int(rng.integers(1, 11)))
            inst = encode_1in3sat(f)
            n_constraints = len(inst.coupling.separations) + len(
                inst.coupling.offline_capacity
            )
            assert n_constraints <= 3 * f.c * f.c

    def test_complementary_weeks_excluded(self):
        inst = encode_1in3sat(FIGURE_FORMULA)
        bad = Schedule([[literal_week(1)], [literal_week(-1)]], [[0.0], [0.0]])
        assert any(v.kind == "Separation" for v in scheduling_violations(inst, bad))


class TestSolveAndDecode:
    def test_single_clause_three_schedules(self):
        f = Formula(n=3, clauses=((1, 2, 3),))
        inst = encode_1in3sat(f)
        feasible_weeks = []
        for w in range(inst.grid.H):
            sched = Schedule([[w]], [[0.0]])
            if scheduling_violations(inst, sched) == []:
                feasible_weeks.append(w)
        assert feasible_weeks == [literal_week(1), literal_week(2), literal_week(3)]

    def test_decode_direct_reading(self):
        f = Formula(n=3, clauses=((1, 2, 3),))
        sched = Schedule([[literal_week(2)]], [[0.0]])
        assert decode_assignment(f, sched) == [False, True, False]

    def test_decode_rejects_partial(self):
        f = Formula(n=3, clauses=((1, 2, 3),))
        sched = Schedule([[-1]], [[0.0]])
        with pytest.raises(DecodeError):
            decode_assignment(f, sched)

    def test_decode_rejects_wrong_week(self):
        f = Formula(n=3, clauses=((1, 2, 3),))
        sched = Schedule([[literal_week(-1)]], [[0.0]])
        with pytest.raises(DecodeError):
            decode_assignment(f, sched)

    def test_figure_formula_roundtrip(self):
        inst = encode_1in3sat(FIGURE_FORMULA)
        res = solve_encoded(inst)
        assert res.status == scheduler.STATUS_FEASIBLE
        assignment = decode_assignment(FIGURE_FORMULA, res.schedule)
        assert assignment_satisfies(FIGURE_FORMULA, assignment)

    def test_unsatisfiable_pair(self):
        f = Formula(n=1, clauses=((1, 1, 1), (-1, -1, -1)))
        assert not brute_force_satisfiable(f)
        res = solve_encoded(encode_1in3sat(f))
        assert res.status == scheduler.STATUS_INFEASIBLE

    def test_roundtrip_random_formulas(self):
        rng = np.random.default_rng(7)
        agree = 0
        for _ in range(15):
            f = random_formula(rng, n=int(rng.integers(3, 8)), c=int(rng.integers(2, 9)))
            expected = brute_force_satisfiable(f)
            res = solve_encoded(encode_1in3sat(f), seed=1)
            got = res.status == scheduler.STATUS_FEASIBLE
            assert got == expected
            if got:
                assignment = decode_assignment(f, res.schedule)
                assert assignment_satisfies(f, assignment)
            agree += 1
        assert agree == 15
