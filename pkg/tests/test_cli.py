import json
import subprocess
import sys

import pytest

from reldeleg import relativistic as rel
from reldeleg.circuit2ham import Circuit, dump as dump_circuit
from reldeleg.cli import descriptor_argv, main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


class TestExamples:
    def test_game_z(self, capsys):
        code, rec = run(["game", "--term", "1.0 Z", "--engine", "exact"], capsys)
        assert code == 0
        assert rec["outputs"]["exact"]["total"] == pytest.approx(1.0)
        assert rec["inputs"]["hamiltonian"]["terms"]

    def test_diag(self, capsys):
        # terms are averaged over m, so these two give (X + Z) / 2
        code, rec = run(["diag", "--term", "1 X", "--term", "1 Z"], capsys)
        assert code == 0
        assert rec["outputs"]["lambda0"] == pytest.approx(-0.7071067811865476, abs=1e-12)

    def test_reltime(self, capsys):
        code, rec = run(["reltime", "--t0", "1", "--t1", "0.1"], capsys)
        assert code == 0 and rec["outputs"]["verdict"]["ok"]
        grid = rec["outputs"]["attack_grid"]
        assert grid["max_feasible_x"] <= 0.5 < grid["min_infeasible_x"]
        assert grid["min_infeasible_x"] - grid["max_feasible_x"] < 0.02

    def test_reltime_agents(self, capsys):
        code, rec = run(["reltime", "--agents"], capsys)
        assert code == 0 and rec["outputs"]["attack_grid"]["feasible"] == 0


class TestExitCodes:
    def test_late_schedule_is_negative(self, tmp_path, capsys):
        path = tmp_path / "s.json"
        rel.dump(rel.intercept_schedule(1.0, 0.1, 0.8), path)
        code, rec = run(["reltime", "--schedule", str(path)], capsys)
        assert code == 1 and rec["status"] == "negative"
        assert rec["inputs"]["schedule"]["sha256"]

    def test_c2h(self, tmp_path, capsys):
        path = tmp_path / "c.txt"
        dump_circuit(Circuit(1, (("X", (0,)),)), path)
        code, rec = run(["c2h", str(path)], capsys)
        assert code == 0 and rec["outputs"]["report"]["completeness_ok"]
        code, rec = run(["c2h", str(path), "--epsilon", "0"], capsys)
        assert code == 0

    def test_c2h_bound_fails(self, tmp_path, capsys):
        path = tmp_path / "c.txt"
        dump_circuit(Circuit(1, (("X", (0,)), ("X", (0,)))), path)
        code, rec = run(["c2h", str(path), "--epsilon", "0"], capsys)
        assert code == 1

    @pytest.mark.parametrize("argv", [
        ["diag"],
        ["diag", "--term", "1 Q"],
        ["diag", "/nonexistent/h.txt"],
        ["game", "--term", "2 Z"],
        ["game", "--term", "1 Z", "--p1", "bogus"],
        ["reltime", "--t1", "0.5"],
    ])
    def test_errors(self, argv, capsys):
        code, rec = run(argv, capsys)
        assert code == 2
        assert rec["status"] == "error" and rec["error"] and rec["message"]

    def test_usage_error(self, capsys):
        assert main(["nonsense"]) == 2
        assert main(["diag", "--levels", "x"]) == 2


class TestRun:
    DESC = {"command": "game", "args": {"term": ["0.5 X", "0.5 Z"], "p": 0.5, "engine": "both",
                                        "rounds": 500, "seed": 42}}

    def test_argv(self):
        assert descriptor_argv({"command": "diag", "args": {"term": ["1 Z"], "levels": 2}}) == [
            "diag", "--levels", "2", "--term", "1 Z"]
        assert descriptor_argv({"command": "reltime", "args": {"agents": True, "schedule": None}}) == [
            "reltime", "--agents"]

    def test_byte_identical(self, tmp_path):
        desc = tmp_path / "d.json"
        desc.write_text(json.dumps(self.DESC))
        outs = []
        for i in range(2):
            target = tmp_path / f"out{i}.json"
            assert main(["run", str(desc), "-o", str(target)]) == 0
            outs.append(target.read_bytes())
        assert outs[0] == outs[1]
        rec = json.loads(outs[0])
        assert rec["descriptor"] == self.DESC and rec["seed"] == 42

    def test_bad_descriptor(self, tmp_path, capsys):
        desc = tmp_path / "d.json"
        desc.write_text(json.dumps({"command": "plot"}))
        code, rec = run(["run", str(desc)], capsys)
        assert code == 2

    def test_console_script(self):
        res = subprocess.run([sys.executable, "-m", "reldeleg.cli", "magic-square", "--engine", "exact"],
                             capture_output=True, text=True, check=False)
        assert res.returncode == 0
        rec = json.loads(res.stdout)
        assert rec["outputs"]["classical_value"]["fraction"] == "8/9"
        assert rec["outputs"]["exact"]["total"] == pytest.approx(1.0)
