import json

import numpy as np
import pytest

from outagesched import evaluator
from outagesched.instance_io import (
    GenerationError,
    GeneratorParams,
    ParseError,
    generate_instance,
    parse_instance,
    parse_solution,
    witness_productions,
    write_instance,
    write_solution,
)
from outagesched.model import ModelError, Schedule, UNSCHEDULED, instances_equal
from conftest import pool_params

MINIMAL = {
    "grid": {"T": 1, "H": 1, "D": 1.0, "week_of_step": [0]},
    "type1": [{"pmin": [[0.0]], "pmax": [[5.0]], "cost": [[2.0]]}],
    "type2": [
        {
            "pmax": [1.0],
            "xi": 10.0,
            "c_final": 0.5,
            "cycles": [
                {
                    "da": 1, "to": None, "ta": None, "rmin": 0.0, "rmax": 1.0,
                    "q": 0.9, "qprime": 0.0, "amax": 10.0, "smax": 10.0,
                    "bo": 0.0, "mmax": 10.0, "pb": [[0.0, 1.0]],
                    "c_refuel": 1.0, "resource_windows": [[0, 1]],
                }
            ],
        }
    ],
    "scenarios": {"S": 1, "epsilon": 0.0, "demand": [[3.0]]},
    "coupling": {
        "separations": [],
        "max_offline": [],
        "resources": [],
        "offline_capacity": [],
    },
}


class TestParse:
    def test_minimal_instance(self):
        inst = parse_instance(json.dumps(MINIMAL))
        assert (inst.grid.T, inst.I, inst.J, inst.scenarios.S) == (1, 1, 1, 1)

    def test_reload_bound_order_named(self):
        doc = json.loads(json.dumps(MINIMAL))
        doc["type2"][0]["cycles"][0]["rmin"] = 5.0
        doc["type2"][0]["cycles"][0]["rmax"] = 1.0
        with pytest.raises(ParseError, match="reload bounds out of order"):
            parse_instance(json.dumps(doc))

    def test_missing_field_path(self):
        doc = json.loads(json.dumps(MINIMAL))
        del doc["type2"][0]["xi"]
        with pytest.raises(ParseError, match=r"type2\[0\].*xi"):
            parse_instance(json.dumps(doc))

    def test_syntax_error_has_location(self):
        with pytest.raises(ParseError, match="line"):
            parse_instance("{ not json }")

    def test_roundtrip_pool(self):
        for seed in range(100):
            params = GeneratorParams(I=2, J=1, K=1, H=8, steps_per_week=2, S=2, seed=seed)
            inst, _ = generate_instance(params)
            text = write_instance(inst)
            again = parse_instance(text)
            assert instances_equal(inst, again)
            assert write_instance(again) == text


class TestWriteSolution:
    def test_unscheduled_sentinel(self):
        inst = parse_instance(json.dumps(MINIMAL))
        sched = Schedule([[UNSCHEDULED]], [[0.0]])
        prods = [np.zeros((2, 1))]
        doc = json.loads(write_solution(inst, sched, prods, 0.0))
        assert doc["ha"] == [[-1]]

    def test_nan_rejected(self):
        inst = parse_instance(json.dumps(MINIMAL))
        sched = Schedule([[UNSCHEDULED]], [[0.0]])
        prods = [np.full((2, 1), np.nan)]
        with pytest.raises(ModelError, match="non-finite"):
            write_solution(inst, sched, prods, 0.0)

    def test_negative_rejected(self):
        inst = parse_instance(json.dumps(MINIMAL))
        sched = Schedule([[UNSCHEDULED]], [[0.0]])
        prods = [np.full((2, 1), -1.0)]
        with pytest.raises(ModelError, match="negative"):
            write_solution(inst, sched, prods, 0.0)

    def test_witness_roundtrip_scores_identically(self, small_pool):
        for _, inst, wit in small_pool[:3]:
            prods = witness_productions(inst, wit)
            obj = evaluator.compute_objective(inst, wit, prods)
            text = write_solution(inst, wit, prods, obj)
            sched2, prods2, obj2 = parse_solution(inst, text)
            assert evaluator.compute_objective(inst, sched2, prods2) == pytest.approx(
                obj, rel=1e-9
            )
            assert evaluator.check_feasibility(inst, sched2, prods2) == []


class TestGenerator:
    def test_deterministic(self):
        params = GeneratorParams(seed=1)
        a, _ = generate_instance(params)
        b, _ = generate_instance(params)
        assert write_instance(a) == write_instance(b)

    def test_distinct_seeds_differ(self):
        a, _ = generate_instance(GeneratorParams(seed=1))
        b, _ = generate_instance(GeneratorParams(seed=2))
        assert write_instance(a) != write_instance(b)

    def test_witness_feasible_across_pool(self, small_pool):
        for _, inst, wit in small_pool:
            prods = witness_productions(inst, wit)
            assert evaluator.check_feasibility(inst, wit, prods) == []

    def test_impossible_params_rejected(self):
        with pytest.raises(GenerationError):
            generate_instance(GeneratorParams(K=5, H=8))

    def test_enumeration_scale(self):
        # dimensions small enough for exhaustive schedule enumeration
        params = GeneratorParams(I=4, J=2, K=2, H=20, steps_per_week=7, S=3, seed=9)
        inst, _ = generate_instance(params)
        assert inst.grid.T == 140
        assert inst.I == 4
