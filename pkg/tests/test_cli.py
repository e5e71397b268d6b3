from __future__ import annotations

import json
import subprocess
import sys

import pytest

from baconshor.circuit import parse_circuit
from baconshor.cli import CHECKPOINT_ENV, RunConfig, UsageError, dispatch, render_table
from baconshor.malignancy import MalignancyReport


def run(argv, capsys):
    code = dispatch(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestBasics:
    def test_code_info(self, capsys):
        code, out, _ = run(["code", "info", "--n", "3"], capsys)
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "[[9,1,3]]"
        assert sum(1 for line in lines if line.strip().startswith("S")) == 4
        assert "logical Z: Z0 Z3 Z6" in out

    def test_unknown_flag_is_a_usage_error(self, capsys):
        code, _, err = run(["code", "info", "--n", "3", "--bogus"], capsys)
        assert code == 2
        assert "usage:" in err

    def test_missing_command(self, capsys):
        assert run([], capsys)[0] == 2

    def test_help_exits_zero(self, capsys):
        code, out, _ = run(["analyze", "exact", "--help"], capsys)
        assert code == 0 and "--checkpoint" in out

    def test_module_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "baconshor", "code", "info", "--n", "2"], capture_output=True, text=True
        )
        assert proc.returncode == 0 and proc.stdout.startswith("[[4,1,2]]")


class TestGadgetsAndSimulation:
    @pytest.mark.parametrize(
        "gadget", ["gauge-ec", "prep0", "prep+", "bell", "steane-ec", "knill-ec", "exrec-cnot"]
    )
    def test_emit_round_trips(self, gadget, tmp_path, capsys):
        out = tmp_path / f"{gadget}.txt"
        code, msg, _ = run(["gadget", "emit", "--n", "3", "--gadget", gadget, "--ec", "knill", "--out", str(out)], capsys)
        assert code == 0 and "locations" in msg
        circuit = parse_circuit(out.read_text())
        assert circuit.dump() == out.read_text()

    def test_emit_to_stdout(self, capsys):
        code, out, _ = run(["gadget", "emit", "--n", "2", "--gadget", "prep0"], capsys)
        assert code == 0 and out.startswith("circuit qubits=4")

    def test_simulate(self, tmp_path, capsys):
        path = tmp_path / "ec.txt"
        run(["gadget", "emit", "--n", "3", "--gadget", "steane-ec", "--out", str(path)], capsys)
        circuit = parse_circuit(path.read_text())
        loc = next(i for i, (_, op) in enumerate(circuit.locations) if op.kind == "cnot" and op.qubits[0] == 4)
        code, out, _ = run(["simulate", "--circuit", str(path), "--faults", f"{loc}:IX"], capsys)
        assert code == 0
        assert "correction ec/xfix: X1" in out
        assert "residual data:" in out

    def test_simulate_bad_faults(self, tmp_path, capsys):
        path = tmp_path / "ec.txt"
        run(["gadget", "emit", "--n", "2", "--gadget", "prep0", "--out", str(path)], capsys)
        assert run(["simulate", "--circuit", str(path), "--faults", "0:XX"], capsys)[0] == 2
        assert run(["simulate", "--circuit", str(tmp_path / "missing.txt")], capsys)[0] == 1


class TestAnalysis:
    def test_exact_order_one_gauge(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        code, msg, _ = run(
            ["analyze", "exact", "--n", "3", "--ec", "gauge", "--order", "1", "--jobs", "1", "--out", str(out)], capsys
        )
        assert code == 0 and "0 malignant" in msg
        report = MalignancyReport.load(out)
        assert report.malignant_count == 0 and report.total_sets == 477
        config = json.loads(out.with_suffix(".config.json").read_text())
        assert config["n"] == 3 and config["ec_method"] == "gauge" and config["orders"] == [1]

    def test_checkpoint_from_environment(self, tmp_path, capsys, monkeypatch):
        ckdir = tmp_path / "ck"
        monkeypatch.setenv(CHECKPOINT_ENV, str(ckdir))
        out = tmp_path / "r.json"
        code, _, _ = run(["analyze", "exact", "--n", "3", "--ec", "steane", "--order", "1", "--out", str(out)], capsys)
        assert code == 0
        (ckpt,) = ckdir.glob("*.json")
        assert json.loads(ckpt.read_text())["key"]["order"] == 1

    def test_reports_are_byte_identical(self, tmp_path, capsys):
        paths = [tmp_path / "a.json", tmp_path / "b.json"]
        for jobs, path in zip(("1", "2"), paths):
            args = ["analyze", "mc", "--n", "3", "--ec", "knill", "--order", "2"]
            assert dispatch(args + ["--samples", "4000", "--seed", "5", "--jobs", jobs, "--out", str(path)]) == 0
        capsys.readouterr()
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_budget_refusal_is_a_compute_failure(self, tmp_path, capsys):
        args = ["analyze", "exact", "--n", "3", "--ec", "steane", "--order", "3", "--budget", "10"]
        code, _, err = run(args + ["--out", str(tmp_path / "r.json")], capsys)
        assert code == 1 and "ResourceGuardError" in err

    def test_invalid_config(self, capsys):
        assert run(["analyze", "mc", "--n", "1", "--ec", "steane", "--order", "2", "--samples", "5", "--seed", "1"], capsys)[0] == 2
        assert run(["analyze", "mc", "--n", "3", "--ec", "steane", "--order", "2", "--samples", "0", "--seed", "1"], capsys)[0] == 2


class TestThresholdCommand:
    def test_threshold_from_directory(self, tmp_path, capsys):
        reports = tmp_path / "reports"
        base = ["analyze", "exact", "--n", "3", "--ec", "knill", "--jobs", "1"]
        assert dispatch(base + ["--order", "2", "--out", str(reports / "k2.json")]) == 0
        assert dispatch(base + ["--order", "1", "--out", str(reports / "k1.json")]) == 0
        capsys.readouterr()
        out = tmp_path / "th.json"
        code, msg, _ = run(["threshold", "--reports", str(reports), "--t", "1", "--out", str(out)], capsys)
        assert code == 0 and msg.startswith("eps_0 = ")
        data = json.loads(out.read_text())
        assert data["k_max"] == 2 and data["method"] == "exact"
        assert data["certificate"]["E_at_epsilon"] <= data["epsilon_0"]

    def test_no_reports(self, tmp_path, capsys):
        (tmp_path / "empty").mkdir()
        args = ["threshold", "--reports", str(tmp_path / "empty"), "--t", "1", "--out", str(tmp_path / "x.json")]
        assert run(args, capsys)[0] == 1


class TestConfig:
    def test_validation(self):
        RunConfig(3, "steane", [2]).validate()
        for bad in (
            RunConfig(1, "steane", [2]),
            RunConfig(3, "shor", [2]),
            RunConfig(3, "steane", []),
            RunConfig(3, "steane", [2], jobs=0),
        ):
            with pytest.raises(UsageError):
                bad.validate()

    def test_persisted(self, tmp_path):
        path = tmp_path / "c.json"
        RunConfig(3, "steane", [2, 3], samples=10, seed=1).save(path)
        data = json.loads(path.read_text())
        assert data["orders"] == [2, 3] and data["tool_version"]

    def test_reproduce_bad_cell(self, capsys):
        assert run(["reproduce-table1", "--cells", "three:steane"], capsys)[0] == 2

    def test_table_rendering(self):
        from baconshor.threshold import ThresholdResult

        mc = ThresholdResult(1.5e-4, "monte_carlo", 3, 1505, 2, {}, 0, {}, interval=(1.4e-4, 1.6e-4))
        table = render_table([(5, "steane", 1505, None, mc)])
        assert "| [[25,1,5]] | steane | 1505 / 1185 | n/a / 1.94 | 1.50 [1.40, 1.60] / 1.92 +- 0.02 |" in table
