import json
import subprocess
import sys

import pytest

from certdel import cli
from cli_cases import CASES


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestExitCodes:
    def test_every_command_registered(self):
        assert set(CASES) == set(cli.COMMANDS)

    @pytest.mark.parametrize("name", sorted(CASES))
    def test_smoke(self, name, capsys):
        code, out, _ = run(CASES[name], capsys)
        assert code == 0
        rep = json.loads(out)
        assert rep["config"]["command"] == name and "build" in rep

    def test_infeasible(self, capsys):
        code, out, err = run(["params"], capsys)
        assert code == 2 and "alphaepsbnd" in out

    def test_schema_violation_names_field(self, capsys):
        code, _, err = run(["params", "--alpha", "0.7"], capsys)
        assert code == 3 and "at alpha" in err

    def test_protocol_usage_error(self, capsys):
        code, _, err = run(["run-protocol", "--l", "5"], capsys)
        assert code == 3

    def test_resource_limit(self, capsys):
        code, _, err = run(["serfling", "--l", str(10**9), "--trials", "1"], capsys)
        assert code == 4


class TestOutput:
    def test_classical_value(self, capsys):
        _, out, _ = run(["classical-value"], capsys)
        res = json.loads(out)["result"]
        assert res["value"] == "8/9" and res["optimal_pairs"] == 144

    def test_csv(self, capsys):
        code, out, _ = run(["otp-selftest", "--samples", "2", "--format", "csv"], capsys)
        assert code == 0 and "passed" in out.splitlines()[0].split(",")

    def test_distinguish_csv_columns(self, capsys):
        _, out, _ = run([*CASES["distinguish"], "--distinguisher", "constant", "--format", "csv"], capsys)
        assert out.splitlines()[0] == "distinguisher_name,case,trials,p_real,p_ideal,advantage,ci_halfwidth"

    def test_out_file(self, tmp_path, capsys):
        path = tmp_path / "r.json"
        assert cli.main([*CASES["otp-selftest"], "--out", str(path)]) == 0
        assert json.loads(path.read_text())["result"]["passed"]


class TestConfig:
    def test_report_round_trip(self, tmp_path, capsys):
        _, first, _ = run(CASES["completeness"], capsys)
        path = tmp_path / "rep.json"
        path.write_text(first)
        _, second, _ = run(["completeness", "--config", str(path)], capsys)
        assert first == second

    def test_flags_override_file(self, tmp_path, capsys):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"samples": 4}))
        _, out, _ = run(["otp-selftest", "--config", str(path), "--samples", "2"], capsys)
        assert json.loads(out)["config"]["samples"] == 2

    def test_unknown_key(self, tmp_path, capsys):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"colour": "red"}))
        code, _, err = run(["otp-selftest", "--config", str(path)], capsys)
        assert code == 3 and "colour" in err

    def test_command_mismatch(self, tmp_path, capsys):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"command": "serfling"}))
        assert run(["otp-selftest", "--config", str(path)], capsys)[0] == 3


class TestDeterminism:
    @pytest.mark.parametrize("name", ["run-protocol", "attack", "serfling"])
    def test_repeat(self, name, capsys):
        assert run(CASES[name], capsys)[1] == run(CASES[name], capsys)[1]

    def test_seed_matters(self, capsys):
        a = run([*CASES["game-winprob"], "--seed", "1"], capsys)[1]
        b = run([*CASES["game-winprob"], "--seed", "2"], capsys)[1]
        assert json.loads(a)["result"] != json.loads(b)["result"]

    def test_thread_count_irrelevant(self, monkeypatch, capsys):
        argv = CASES["completeness"]
        monkeypatch.setenv("CERTDEL_THREADS", "1")
        one = run(argv, capsys)[1]
        monkeypatch.setenv("CERTDEL_THREADS", "4")
        four = run(argv, capsys)[1]
        assert one == four == run([*argv, "--threads", "3"], capsys)[1]

    def test_console_script(self):
        proc = subprocess.run([sys.executable, "-m", "certdel.cli", "classical-value"], capture_output=True, text=True)
        assert proc.returncode == 0 and '"8/9"' in proc.stdout
