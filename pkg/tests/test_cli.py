import json
import os
import subprocess
import sys

import pytest

from wargame_lab import fixture_path
from wargame_lab.cli import main, run_cli

MINIMAL = fixture_path("minimal.json")
WORKED = fixture_path("worked_2x2.json")
ALPHA = fixture_path("alpha.json")


def ok(args):
    r = run_cli(args)
    assert r.exit_code == 0, r.error
    assert all(os.path.exists(p) for p in r.artifacts_written)
    return r


def test_validate_minimal():
    r = ok(["validate", "--scenario", MINIMAL])
    assert "0 errors" in r.stdout_summary


def test_validate_bad_scenario(tmp_path):
    bad = tmp_path / "bad.json"
    doc = json.load(open(MINIMAL))
    doc["penetration"] = [[[1.2]]]
    bad.write_text(json.dumps(doc))
    r = run_cli(["validate", "--scenario", str(bad)])
    assert r.exit_code == 1 and r.error.startswith("error:") and "\n" not in r.error


def test_solve_worked(tmp_path):
    out = tmp_path / "pred.json"
    ok(["solve", "--scenario", WORKED, "--leader", "defender", "--mode", "anticipatory-strong", "--budget", "unbounded", "--out", str(out)])
    eq = json.loads(out.read_text())["equilibrium"]
    assert (eq["defense_index"], eq["attack_index"]) == (1, 1)
    assert eq["p_target_star"] == pytest.approx(0.4)


def test_solve_zero_sum_and_budget(tmp_path):
    out = tmp_path / "pred.json"
    ok(["solve", "--scenario", WORKED, "--zero-sum", "--tolerance", "1e-4", "--out", str(out)])
    doc = json.loads(out.read_text())
    assert abs(doc["mixed"]["value"] - 30) <= 1e-4 and doc["mixed"]["gap"] <= 1e-4
    r = run_cli(["solve", "--scenario", WORKED, "--budget", "5"])
    assert r.exit_code == 1 and "affordable" in r.error


def test_nonconvergence_is_runtime_error(tmp_path, monkeypatch):
    import wargame_lab.cli as cli
    from wargame_lab.equilibria import mixed_minimax as real

    doc = json.load(open(WORKED))
    doc["penetration"] = [[[0.9, 0.2], [0.2, 0.9]]]  # no saddle in the zero-sum view
    pennies = tmp_path / "pennies.json"
    pennies.write_text(json.dumps(doc))
    monkeypatch.setattr(cli, "mixed_minimax", lambda a, tolerance: real(a, tolerance, max_iterations=3))
    r = run_cli(["solve", "--scenario", str(pennies), "--zero-sum", "--tolerance", "1e-9"])
    assert r.exit_code == 2 and r.error.startswith("error: fictitious play")


def test_simulate_score_all_up(tmp_path):
    trace = tmp_path / "t.jsonl"
    report = tmp_path / "r.json"
    ok(["simulate", "--scenario", ALPHA, "--config", fixture_path("all_up.json"), "--seed", "3", "--out", str(trace)])
    r = ok(["score", "--trace", str(trace), "--out", str(report), "--csv", str(tmp_path / "r.csv")])
    doc = json.loads(report.read_text())
    assert doc["blue_total"] == 360 and doc["winner"] == "blue"
    assert "blue 360" in r.stdout_summary


def test_outputs_are_byte_identical(tmp_path):
    paths = []
    for k in range(2):
        out = tmp_path / f"t{k}.jsonl"
        ok(["simulate", "--scenario", ALPHA, "--config", fixture_path("event1.json"), "--seed", "9", "--out", str(out)])
        ok(["score", "--trace", str(out), "--out", str(tmp_path / f"r{k}.json")])
        paths.append(out)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert (tmp_path / "r0.json").read_bytes() == (tmp_path / "r1.json").read_bytes()


def test_malformed_trace_is_runtime_error(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"scenario_name": "x"}\n')
    r = run_cli(["score", "--trace", str(bad)])
    assert r.exit_code == 2 and r.error.startswith("error: malformed trace")


def test_montecarlo_and_compare(tmp_path):
    out = tmp_path / "mc"
    for workers in ("1", "3"):
        ok(["montecarlo", "--scenario", ALPHA, "--config", fixture_path("event1.json"), "--seed", "4", "-n", "6", "--workers", workers, "--keep-traces", "--out", str(out / workers)])
    assert (out / "1" / "summary.json").read_bytes() == (out / "3" / "summary.json").read_bytes()
    assert len(os.listdir(out / "1" / "traces")) == 6
    pred = tmp_path / "pred.json"
    ok(["solve", "--scenario", ALPHA, "--out", str(pred)])
    cmp = tmp_path / "cmp.json"
    r = ok(["compare", "--traces", str(out / "1" / "traces" / "*.jsonl"), "--prediction", str(pred), "--scenario", ALPHA, "--out", str(cmp)])
    doc = json.loads(cmp.read_text())
    assert doc["n_traces"] == 6 and len(doc["observed_attack_frequencies"]) == 3
    assert "agreement" in r.stdout_summary
    assert run_cli(["compare", "--traces", str(tmp_path / "none*.jsonl"), "--prediction", str(pred)]).exit_code == 1


@pytest.mark.parametrize(
    "args",
    [
        [],
        ["fly"],
        ["solve", "--scenario", WORKED, "--mode", "sideways"],
        ["solve", "--scenario", WORKED, "--budget", "lots"],
        ["simulate", "--scenario", ALPHA, "--config", fixture_path("event1.json"), "--bogus"],
    ],
)
def test_usage_errors_exit_one_without_writing(tmp_path, args):
    before = set(os.listdir(tmp_path))
    r = run_cli(args + ["--out", str(tmp_path / "x.json")] if args else args)
    assert r.exit_code == 1 and r.error.startswith("error:") and "usage:" in r.stdout_summary
    assert set(os.listdir(tmp_path)) == before


def test_missing_and_invalid_config(tmp_path):
    assert run_cli(["solve", "--scenario", str(tmp_path / "nope.json")]).exit_code == 1
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"detection_probability": 2}))
    r = run_cli(["simulate", "--scenario", ALPHA, "--config", str(cfg)])
    assert r.exit_code == 1 and "detection_probability" in r.error


def test_main_prints(capsys):
    assert main(["validate", "--scenario", MINIMAL]) == 0
    assert "0 errors" in capsys.readouterr().out
    assert main(["validate"]) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "wargame_lab.cli", "validate", "--scenario", MINIMAL], capture_output=True, text=True)
    assert proc.returncode == 0 and "0 errors" in proc.stdout
