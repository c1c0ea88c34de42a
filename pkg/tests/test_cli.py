import json
import os
import subprocess
import sys

import pytest

from biasprobe.cli import main
from biasprobe.errors import InvalidParameter
from biasprobe.harness import ExperimentConfig, cmd_run, preset, worker_count

SMALL = ["--alg", "ga", "--dim", "3", "--pop", "5", "20", "--runs", "2", "--budget", "200"]


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def _files(d):
    return {f: open(os.path.join(d, f), "rb").read() for f in sorted(os.listdir(d))}


def test_run_writes_traces_and_manifest(tmp_path, capsys):
    out = tmp_path / "runs"
    code, res, _ = run_cli(capsys, "run", *SMALL, "--out", str(out))
    assert code == 0 and res["files"] == 4
    names = sorted(os.listdir(out))
    assert names == ["ga_N20_r0.jsonl", "ga_N20_r1.jsonl", "ga_N5_r0.jsonl", "ga_N5_r1.jsonl",
                     "manifest.json"]
    man = json.loads((out / "manifest.json").read_text())
    assert man["config_hash"] == res["config_hash"]
    assert len(man["files"]) == 4


def test_run_is_deterministic_and_out_excluded_from_hash(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    _, ra, _ = run_cli(capsys, "run", *SMALL, "--out", str(a))
    _, rb, _ = run_cli(capsys, "run", *SMALL, "--out", str(b))
    assert ra["config_hash"] == rb["config_hash"]
    fa, fb = _files(a), _files(b)
    fa.pop("manifest.json"), fb.pop("manifest.json")
    assert fa == fb


def test_hash_changes_with_config():
    base = ExperimentConfig(dim=3)
    assert base.hash() == ExperimentConfig(dim=3, out="elsewhere").hash()
    for change in [dict(dim=4), dict(master_seed=1), dict(runs=3), dict(params={"ga": {"d": 0.3}})]:
        assert ExperimentConfig(**{"dim": 3, **change}).hash() != base.hash()


def test_parallel_equals_sequential(tmp_path, monkeypatch):
    monkeypatch.delenv("BIASPROBE_THREADS", raising=False)
    kw = dict(algorithms=["ga", "pso"], dim=3, popsizes=[5, 7], runs=3, budget=300)
    cmd_run(ExperimentConfig(out=str(tmp_path / "s"), **kw), workers=1)
    cmd_run(ExperimentConfig(out=str(tmp_path / "p"), **kw), workers=2)
    s, p = _files(tmp_path / "s"), _files(tmp_path / "p")
    ms, mp = json.loads(s.pop("manifest.json")), json.loads(p.pop("manifest.json"))
    assert s == p
    assert ms["files"] == mp["files"]


def test_worker_cap(monkeypatch):
    monkeypatch.setenv("BIASPROBE_THREADS", "1")
    assert worker_count(8) == 1
    monkeypatch.setenv("BIASPROBE_THREADS", "x")
    with pytest.raises(InvalidParameter):
        worker_count(2)


def test_config_file_and_validation(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"algorithms": ["ra"], "dim": 2, "popsizes": [5], "runs": 1,
                               "budget": 50}))
    code, res, _ = run_cli(capsys, "run", "--config", str(cfg), "--out", str(tmp_path / "o"))
    assert code == 0 and res["files"] == 1
    cfg.write_text(json.dumps({"algorithm": ["ra"]}))
    code, _, err = run_cli(capsys, "run", "--config", str(cfg))
    assert code == 2 and json.loads(err)["error"] == "invalid_parameter"


def test_preset_contents():
    p = preset("paper-f0")
    assert (p.algorithms, p.dim, p.budget, p.popsizes, p.runs) == (["ga", "pso"], 30, 300_000,
                                                                   [5, 20, 100], 50)
    with pytest.raises(InvalidParameter):
        preset("nope")


def test_sga_steps_fill_budget():
    c = ExperimentConfig(algorithms=["sga"], budget=1000).algorithm_config("sga", 20)
    assert c.budget == 1000 and c.steps == 980


def test_report_and_plots(tmp_path, capsys):
    runs = tmp_path / "runs"
    run_cli(capsys, "run", "--alg", "ga,ra", "--dim", "3", "--pop", "5", "10", "--runs", "6",
            "--budget", "300", "--out", str(runs))
    rep, csvp = tmp_path / "r.json", tmp_path / "r.csv"
    code, res, _ = run_cli(capsys, "report", str(runs), "--out", str(rep), "--csv", str(csvp))
    assert code == 0 and res["groups"] == 4
    data = json.loads(rep.read_text())
    assert [r["metadata"]["label"] for r in data["reports"]] == ["ga_N5", "ga_N10", "ra_N5",
                                                                 "ra_N10"]
    assert set(data["sensitivity"]) == {"ga", "ra"}
    assert len(csvp.read_text().splitlines()) == 1 + 4 * 3

    code, res, _ = run_cli(capsys, "report", str(runs))
    assert code == 0 and len(res["reports"]) == 4

    figs = tmp_path / "figs"
    for fig, inputs, extra in [("pcoords", [str(runs)], []),
                               ("evolution", [str(runs / "ga_N5_r0.jsonl")], ["--dimension", "2"]),
                               ("pstrip", [str(rep)], [])]:
        code, res, _ = run_cli(capsys, "plot", *inputs, "--figure", fig, "--out", str(figs), *extra)
        assert code == 0
        assert all(os.path.exists(p) for p in res["svg"])
    assert sorted(os.listdir(figs)) == ["evolution_d2.svg", "pcoords_first.svg",
                                        "pcoords_last.svg", "pstrip.svg"]


def test_report_needs_five_runs(tmp_path, capsys):
    runs = tmp_path / "runs"
    run_cli(capsys, "run", *SMALL, "--out", str(runs))
    code, _, err = run_cli(capsys, "report", str(runs))
    assert code == 2 and "at least 5" in json.loads(err)["message"]


def test_report_malformed_trace_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"type":"header"}\n{oops\n')
    code, _, err = run_cli(capsys, "report", str(bad))
    assert code == 3 and json.loads(err)["error"] == "trace_format"


def test_theory(tmp_path, capsys):
    code, res, _ = run_cli(capsys, "theory", "--N", "50", "--d", "0.2", "--sigma2", "0.1")
    assert code == 0 and res["K"] == pytest.approx(0.0093392, abs=1e-7)
    code, res, _ = run_cli(capsys, "theory", "--N", "10", "--d", "1.0", "--sigma2", "0.1")
    assert res["K"] == "infinite"
    csvp = tmp_path / "scan.csv"
    code, res, _ = run_cli(capsys, "theory", "--N", "10", "--d", "0.25", "--sigma2", "1e-4",
                           "--scan", "3", "--trials", "2000", "--csv", str(csvp))
    assert res["scan_rows"] == 3 and len(csvp.read_text().splitlines()) == 4


def test_rngtest(tmp_path, capsys):
    code, res, _ = run_cli(capsys, "rngtest", "--count", "20000", "--out", str(tmp_path))
    assert code == 0 and res["pairs"] == 20000 - 65
    assert os.path.exists(res["csv"]) and os.path.exists(res["svg"])
    code, res, _ = run_cli(capsys, "rngtest", "--count", "1000", "--mode", "offset",
                           "--offset", "3", "--out", str(tmp_path))
    assert res["pairs"] == len(range(3, 1000 - 65, 65))
    code, res, _ = run_cli(capsys, "plot", res["csv"], "--figure", "scatter", "--out", str(tmp_path))
    assert code == 0


def test_rngtest_recorded_exhausted(tmp_path, capsys):
    src = tmp_path / "r.txt"
    src.write_text("0.1\n0.2\n0.3\n")
    code, _, err = run_cli(capsys, "rngtest", "--engine", f"recorded:{src}", "--count", "10",
                           "--out", str(tmp_path))
    assert code == 4 and json.loads(err)["error"] == "source_exhausted"


def test_algk(capsys):
    code, res, _ = run_cli(capsys, "algk", "--seed", "6065038420")
    assert code == 0 and res["kind"] == "fixed_point"
    code, res, _ = run_cli(capsys, "algk", "--seed", "0", "--scan", "5", "--max-steps", "20000")
    assert code == 0 and sum(c["count"] for c in res["classes"]) + res["undecided"] == 5


def test_usage_errors(capsys):
    code, _, err = run_cli(capsys, "frobnicate")
    assert code == 2 and json.loads(err)["error"] == "usage"
    code, _, err = run_cli(capsys, "run", "--alg", "de", "--out", "/tmp/unused_biasprobe")
    assert code == 2 and "unknown algorithm" in json.loads(err)["message"]
    code, _, err = run_cli(capsys, "plot", "x", "--figure", "evolution")
    assert code == 2


def test_io_error_exit_code(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run_cli(capsys, "rngtest", "--count", "100", "--out", str(blocker / "sub"))
    assert code == 5 and json.loads(err)["error"] == "io"


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "biasprobe", "theory", "--N", "5", "--d", "0.1",
                        "--sigma2", "0.01"], capture_output=True, text=True, check=False)
    assert r.returncode == 0 and json.loads(r.stdout)["N"] == 5
    r = subprocess.run([sys.executable, "-m", "biasprobe", "theory", "--N", "1", "--d", "0.1",
                        "--sigma2", "0.01"], capture_output=True, text=True, check=False)
    assert r.returncode == 2 and len(r.stderr.strip().splitlines()) == 1
