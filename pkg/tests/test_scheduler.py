import numpy as np
import pytest

from outagesched import scheduler
from outagesched.model import Schedule, TimeGrid, UNSCHEDULED
from outagesched.scheduler import (
    SearchConfig,
    accumulate_beta,
    estimate_fuel,
    estimate_fuel_chain,
    fb_adjusted,
    solve_schedule,
    surrogate_objective,
)
from outagesched.satgen import Formula, decode_assignment, encode_1in3sat
from conftest import make_cycle, make_instance, scheduling_violations


class TestBeta:
    def test_unit_case(self):
        inst = make_instance(H=5, plants=[dict(pmax=1.0, cycles=[make_cycle(ta=None)])])
        beta = accumulate_beta(inst.type2[0], inst.grid)
        assert beta.tolist() == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]

    def test_zero_case(self):
        inst = make_instance(H=4, plants=[dict(pmax=0.0, cycles=[make_cycle(ta=None)])])
        beta = accumulate_beta(inst.type2[0], inst.grid)
        assert beta.tolist() == [0.0] * 5

    def test_alternating_pmax(self):
        # pmax alternating 2, 0 per week with D=2: beta = 0, 4, 4, 8, ...
        grid = TimeGrid.uniform(4, 1, 2.0)
        inst = make_instance(
            H=4,
            D=2.0,
            plants=[dict(pmax=np.array([2.0, 0.0, 2.0, 0.0]), cycles=[make_cycle(ta=None)])],
        )
        beta = accumulate_beta(inst.type2[0], inst.grid)
        assert beta.tolist() == [0.0, 4.0, 4.0, 8.0, 8.0]


class TestFuelChain:
    def test_fb_identity_above_threshold(self):
        for fi in (10.0, 25.0, 1000.0):
            assert fb_adjusted(fi, 10.0) == fi

    def test_fb_zero_at_minus_bo(self):
        assert fb_adjusted(-10.0, 10.0) == 0.0

    def test_fb_halfway_at_zero(self):
        assert fb_adjusted(0.0, 10.0) == 5.0

    def test_chain_hand_case(self):
        inst = make_instance(
            H=10,
            plants=[
                dict(
                    pmax=2.0,
                    xi=4.0,
                    cycles=[
                        make_cycle(q=0.5, rmax=10.0),
                        make_cycle(q=0.5, rmax=10.0),
                    ],
                )
            ],
        )
        beta = accumulate_beta(inst.type2[0], inst.grid)
        chain = estimate_fuel_chain(inst.type2[0], np.array([3, 7]), np.array([4.0, 6.0]), beta)
        assert chain.fu.tolist() == [6.0, 6.0]
        assert chain.fi.tolist() == [-2.0, -2.0]
        assert chain.fb.tolist() == [0.0, 0.0]
        assert chain.fa.tolist() == [4.0, 6.0]


class TestSurrogate:
    def test_plant_that_never_runs_dry(self):
        inst = make_instance(H=5, plants=[dict(pmax=1.0, xi=100.0, cycles=[make_cycle(ta=None)])])
        sched = Schedule([[UNSCHEDULED]], [[0.0]])
        est = estimate_fuel(inst, sched)
        assert surrogate_objective(inst, sched, est) == 0.0

    def test_empty_tank_before_first_outage(self):
        # alpha = 1; refuel covers the tail, so only the four dry weeks
        # before the outage contribute
        inst = make_instance(H=8, plants=[dict(pmax=1.0, xi=0.0, cycles=[make_cycle()])])
        sched = Schedule([[4]], [[10.0]])
        est = estimate_fuel(inst, sched)
        assert surrogate_objective(inst, sched, est) == pytest.approx(4.0)

    def test_two_outage_hand_case(self):
        inst = make_instance(
            H=10,
            plants=[
                dict(
                    pmax=2.0,
                    xi=4.0,
                    cycles=[
                        make_cycle(q=0.5, rmax=10.0),
                        make_cycle(q=0.5, rmax=10.0),
                    ],
                )
            ],
        )
        sched = Schedule([[3, 7]], [[4.0, 6.0]])
        est = estimate_fuel(inst, sched)
        # alpha=2; terms: 2*max(0, 3-2) + 2*max(0, 7-4-2) + 2*max(0, 10-8-3)
        assert surrogate_objective(inst, sched, est) == pytest.approx(4.0)


class TestSolve:
    def test_sat_satisfiable(self):
        f = Formula(n=3, clauses=((1, 2, 3),))
        inst = encode_1in3sat(f)
        res = solve_schedule(inst, SearchConfig(refuel_quantum=1.0, time_budget=10, rng_seed=0))
        assert res.status == scheduler.STATUS_FEASIBLE
        assignment = decode_assignment(f, res.schedule)
        assert sum(assignment) == 1

    def test_sat_contradiction_proven_infeasible(self):
        f = Formula(n=1, clauses=((1, 1, 1), (-1, -1, -1)))
        inst = encode_1in3sat(f)
        res = solve_schedule(inst, SearchConfig(refuel_quantum=1.0, time_budget=10, rng_seed=0))
        assert res.status == scheduler.STATUS_INFEASIBLE

    def test_generated_instances_feasible_and_clean(self, small_pool):
        for _, inst, _ in small_pool[:4]:
            res = solve_schedule(
                inst, SearchConfig(refuel_quantum=25.0, time_budget=20, rng_seed=5, max_nodes=150_000)
            )
            assert res.status == scheduler.STATUS_FEASIBLE
            res.schedule.validate(inst)
            assert scheduling_violations(inst, res.schedule) == []

    def test_refuels_quantized(self, one_instance):
        inst, _ = one_instance
        quantum = 25.0
        res = solve_schedule(
            inst, SearchConfig(refuel_quantum=quantum, time_budget=20, rng_seed=5, max_nodes=150_000)
        )
        for i, plant in enumerate(inst.type2):
            for k, cyc in enumerate(plant.cycles):
                if not res.schedule.scheduled(i, k):
                    continue
                r = res.schedule.r[i][k]
                on_grid = abs(r / quantum - round(r / quantum)) < 1e-9
                assert on_grid or r in (cyc.rmin, cyc.rmax)

    def test_deterministic_replay(self, one_instance):
        # node budget caps the run; the generous wall clock never interferes
        inst, _ = one_instance
        cfg = SearchConfig(refuel_quantum=25.0, time_budget=600, rng_seed=11, max_nodes=60_000)
        a = solve_schedule(inst, cfg)
        b = solve_schedule(inst, cfg)
        assert a.status == b.status == scheduler.STATUS_FEASIBLE
        assert all(np.array_equal(x, y) for x, y in zip(a.schedule.ha, b.schedule.ha))
        assert all(np.array_equal(x, y) for x, y in zip(a.schedule.r, b.schedule.r))
        assert a.nodes == b.nodes

    def test_seed_changes_exploration(self, one_instance):
        inst, _ = one_instance
        runs = {
            tuple(
                tuple(row)
                for row in solve_schedule(
                    inst,
                    SearchConfig(refuel_quantum=25.0, time_budget=20, rng_seed=s, max_nodes=20_000),
                ).schedule.ha
            )
            for s in range(4)
        }
        assert len(runs) >= 1  # schedules exist for every seed

    def test_witness_never_pruned_on_exact_constraints(self, small_pool):
        # propagation keeps the witness when fuel estimates are not binding
        for _, inst, wit in small_pool[:5]:
            eng = scheduler._Engine(inst, SearchConfig(refuel_quantum=25.0, time_budget=5, rng_seed=3))
            assert eng.replay(wit, check_fuel=False)

    def test_bnb_incumbents_strictly_decrease(self, one_instance):
        inst, _ = one_instance
        eng = scheduler._Engine(
            inst, SearchConfig(refuel_quantum=25.0, time_budget=20, rng_seed=7, max_nodes=100_000)
        )
        eng.solve()
        vals = eng.incumbents
        assert len(vals) >= 1
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_budget_exhaustion_without_solution(self):
        # over-constrained SAT instance, tiny node cap: no proof, no schedule
        f = Formula(n=1, clauses=((1, 1, 1), (-1, -1, -1)))
        inst = encode_1in3sat(f)
        res = solve_schedule(
            inst, SearchConfig(refuel_quantum=1.0, time_budget=10, rng_seed=0, max_nodes=1)
        )
        assert res.status in (scheduler.STATUS_UNKNOWN, scheduler.STATUS_INFEASIBLE)
