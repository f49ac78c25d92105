import json

import numpy as np
import pytest

from outagesched import cli
from outagesched.instance_io import (
    GeneratorParams,
    generate_instance,
    witness_productions,
    write_instance,
    write_solution,
)
from outagesched import evaluator
from outagesched.satgen import Formula, encode_1in3sat


@pytest.fixture(scope="module")
def instance_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "instance.json"
    inst, wit = generate_instance(
        GeneratorParams(I=3, J=2, K=2, H=14, steps_per_week=3, S=2, seed=4)
    )
    path.write_text(write_instance(inst))
    return path, inst, wit


SOLVE_FLAGS = [
    "--time-budget", "20",
    "--refuel-quantum", "25",
    "--cp-max-nodes", "15000",
    "--sa-max-iters", "300",
]


class TestSolve:
    def test_end_to_end(self, instance_file, tmp_path, capsys):
        path, inst, _ = instance_file
        out = tmp_path / "solution.json"
        code = cli.main(["solve", str(path), "--out", str(out), "--seed", "7", *SOLVE_FLAGS])
        assert code == 0
        doc = json.loads(out.read_text())
        assert set(doc) == {"ha", "r", "production", "objective"}
        summary = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert summary["violations"] == 0
        assert {"cp", "planning", "delta_evaluation", "modulation", "io"} <= set(
            summary["timings"]
        )

    def test_deterministic_given_seed(self, instance_file, tmp_path):
        path, _, _ = instance_file
        texts = []
        for run in range(2):
            out = tmp_path / f"sol{run}.json"
            assert cli.main(["solve", str(path), "--out", str(out), "--seed", "3", *SOLVE_FLAGS]) == 0
            texts.append(out.read_bytes())
        assert texts[0] == texts[1]

    def test_unsat_encoding_exits_3(self, tmp_path):
        f = Formula(n=1, clauses=((1, 1, 1), (-1, -1, -1)))
        path = tmp_path / "unsat.json"
        path.write_text(write_instance(encode_1in3sat(f)))
        code = cli.main(["solve", str(path), "--time-budget", "10", "--refuel-quantum", "1"])
        assert code == cli.EXIT_SCHEDULER

    def test_missing_file_exits_1(self):
        assert cli.main(["solve", "/nonexistent/foo.json"]) == cli.EXIT_ERROR


class TestValidate:
    def test_witness_passes(self, instance_file, tmp_path, capsys):
        path, inst, wit = instance_file
        prods = witness_productions(inst, wit)
        obj = evaluator.compute_objective(inst, wit, prods)
        sol = tmp_path / "witness.json"
        sol.write_text(write_solution(inst, wit, prods, obj))
        code = cli.main(["validate", str(path), str(sol)])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["feasible"] is True
        assert report["count"] == 0
        assert report["objective"] == pytest.approx(obj, rel=1e-9)

    def test_broken_solution_exits_2(self, instance_file, tmp_path, capsys):
        path, inst, wit = instance_file
        prods = [p.copy() for p in witness_productions(inst, wit)]
        prods[0][0] += 1.0  # demand now violated in scenario 0
        sol = tmp_path / "bad.json"
        sol.write_text(write_solution(inst, wit, prods, 0.0))
        assert cli.main(["validate", str(path), str(sol)]) == cli.EXIT_INFEASIBLE
        report = json.loads(capsys.readouterr().out)
        assert report["count"] > 0
        assert report["violations"][0]["kind"] == "Demand"


class TestGenerate:
    def test_writes_instance_and_witness(self, tmp_path):
        inst_path = tmp_path / "gen.json"
        wit_path = tmp_path / "wit.json"
        code = cli.main(
            [
                "generate", "--out", str(inst_path), "--witness", str(wit_path),
                "--plants", "2", "--cycles", "1", "--weeks", "12",
                "--steps-per-week", "2", "--scenarios", "2", "--seed", "5",
            ]
        )
        assert code == 0
        assert cli.main(["validate", str(inst_path), str(wit_path)]) == 0

    def test_byte_identical_for_same_seed(self, tmp_path):
        outs = []
        for run in range(2):
            p = tmp_path / f"g{run}.json"
            assert cli.main(["generate", "--out", str(p), "--seed", "1"]) == 0
            outs.append(p.read_bytes())
        assert outs[0] == outs[1]

    def test_bad_params_exit_1(self, tmp_path):
        code = cli.main(["generate", "--out", str(tmp_path / "x.json"), "--cycles", "9", "--weeks", "10"])
        assert code == cli.EXIT_ERROR


class TestEncodeSatAndStats:
    def test_encode_then_stats(self, tmp_path, capsys):
        clause_file = tmp_path / "f.cnf"
        clause_file.write_text("1 2 -3 0\n-1 2 4 0\n")
        out = tmp_path / "sat_instance.json"
        assert cli.main(["encode-sat", str(clause_file), "--out", str(out)]) == 0
        assert cli.main(["stats", str(out)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["type2_plants"] == 2
        assert doc["H"] == 8
        assert doc["separations"] == 1

    def test_rejects_two_literal_clause(self, tmp_path):
        clause_file = tmp_path / "bad.cnf"
        clause_file.write_text("1 2 0\n")
        assert cli.main(["encode-sat", str(clause_file)]) == cli.EXIT_ERROR
