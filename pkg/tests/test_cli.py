import json
import math
import os
import subprocess
import sys

import pytest

from besselheat import cli, hitting, kernels, killed

NT = ["--no-timing"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def record(out):
    return json.loads(out.strip().splitlines()[-1])


# eval

def test_eval_free(capsys):
    code, out, _ = run(capsys, "eval", "--t", "1", "--x", "2", "--y", "3", "--method", "free")
    assert code == 0
    rec = record(out)
    assert rec["schema_version"] == cli.SCHEMA_VERSION and rec["command"] == "eval"
    assert rec["results"]["value"] == kernels.free_kernel(0.0, 1.0, 2.0, 3.0)
    assert set(rec["diagnostics"]) == {"error_bounds", "n_skipped", "runtime_ms"}


def test_eval_image(capsys):
    code, out, _ = run(capsys, "eval", "--t", "1", "--x", "2", "--y", "3", "--mu", "0.5",
                       "--method", "image")
    assert code == 0
    assert record(out)["results"]["value"] == killed.killed_kernel_mu_half(1.0, 2.0, 3.0)


def test_eval_hunt_and_sandwich(capsys):
    code, out, _ = run(capsys, "eval", "--t", "1", "--x", "2", "--y", "3", "--method", "hunt")
    res = record(out)["results"]
    assert code == 0 and res["value"] == killed.killed_kernel(1, 2, 3).value
    assert res["error_bound"] > 0
    code, out, _ = run(capsys, "eval", "--t", "1", "--x", "2", "--y", "3", "--method", "sandwich")
    res = record(out)["results"]
    assert res["lower"] <= killed.killed_kernel(1, 2, 3).value <= res["upper"]
    code, out, _ = run(capsys, "eval", "--t", "4", "--x", "4", "--y", "6", "--a", "2",
                       "--method", "hunt")
    assert record(out)["results"]["value"] == pytest.approx(
        0.25 * killed.killed_kernel(1, 2, 3).value, rel=1e-14)


def test_seventeen_digits(capsys):
    _, out, _ = run(capsys, "eval", "--t", "1", "--x", "2", "--y", "3", "--method", "free")
    raw = out.split('"value": ')[1].split(",")[0]
    assert float(raw) == kernels.free_kernel(0.0, 1.0, 2.0, 3.0)
    assert len(raw.replace(".", "").replace("-", "").split("e")[0].lstrip("0")) == 17


@pytest.mark.parametrize("argv,code", [
    (["eval", "--t", "1", "--x", "0.5", "--y", "3", "--method", "hunt"], 3),
    (["eval", "--t", "-1", "--x", "2", "--y", "3", "--method", "free"], 3),
    (["eval", "--t", "1", "--x", "2", "--y", "3", "--method", "image"], 2),
    (["eval", "--t", "1", "--x", "2", "--y", "3", "--mu", "0.5", "--method", "hunt"], 2),
    (["eval", "--t", "1", "--x", "2", "--y", "3"], 2),
    (["eval", "--t", "1", "--x", "2"], 2),
    (["frobnicate"], 2),
    (["sweep", "--regime", "small", "--envelope", "large"], 2),
    (["sweep", "--regime", "small", "--envelope", "small", "--grid", "t=1:2"], 2),
    (["mc", "--dim", "4", "--x", "2", "--t", "1"], 2),
    (["mc", "--dim", "2", "--x", "2", "--t", "1", "--hist", "abc"], 2),
    (["mc", "--dim", "2", "--x", "0.5", "--t", "1", "--paths", "10"], 3),
    (["hitting", "--x", "2"], 2),
    (["hitting", "--x", "2", "--survival", "1", "--lower"], 2),
    (["hitting", "--x", "1", "--density", "1"], 3),
])
def test_exit_codes(capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_non_convergence_exit_with_interval(capsys):
    code, out, _ = run(capsys, "eval", "--t", "1000", "--x", "1.0001", "--y", "1.5",
                       "--method", "hunt", "--talbot-nodes", "8", "--rel-tol", "1e-12")
    assert code == 4
    lo, hi = record(out)["results"]["interval"]
    assert lo == 0.0 and hi == pytest.approx(kernels.free_kernel(0.0, 1000.0, 1.0001, 1.5))


# sweep

def test_sweep_one_point_matches_eval(capsys, tmp_path):
    out_csv = tmp_path / "s.csv"
    code, out, _ = run(capsys, "sweep", "--regime", "all", "--oracle", "hunt", "--envelope",
                       "unified", "--grid", "t=1,x=2,y=3", "--out", str(out_csv), *NT)
    assert code == 0
    lines = out_csv.read_text().splitlines()
    assert lines[0] == "t,x,y,oracle,envelope,ratio,err_bound,skipped"
    row = lines[1].split(",")
    assert float(row[3]) == killed.killed_kernel(1, 2, 3).value
    assert row[-1] == "false"
    summary = record(out)["results"]
    assert summary["n_points"] == 1 and summary["min_ratio"] == summary["max_ratio"]


def test_sweep_unwritable_path(capsys):
    code, _, _ = run(capsys, "sweep", "--regime", "all", "--oracle", "mu-half", "--envelope",
                     "mu", "--grid", "t=1,x=2,y=3", "--out", "/nonexistent/dir/s.csv")
    assert code == 5


def test_sweep_baseline_cycle(capsys, tmp_path):
    base = str(tmp_path / "base.json")
    argv = ["sweep", "--regime", "large", "--oracle", "mu-half", "--envelope", "mu",
            "--grid", "t=0.01:100:5,x=1.01:100:5,y=1.01:100:5", "--baseline", base, *NT]
    assert run(capsys, *argv, "--check-baseline")[0] == 6
    assert run(capsys, *argv, "--update-baseline")[0] == 0
    code, out, _ = run(capsys, *argv, "--check-baseline")
    assert code == 0 and record(out)["results"]["baseline"]["ok"] is True


def test_config_precedence(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"method": "free", "mu": 0.5}))
    monkeypatch.setenv("HK_CONFIG", str(cfg))
    _, out, _ = run(capsys, "eval", "--t", "1", "--x", "2", "--y", "3")
    rec = record(out)
    assert rec["inputs"]["method"] == "free" and rec["inputs"]["mu"] == 0.5
    assert rec["results"]["value"] == kernels.free_kernel(0.5, 1.0, 2.0, 3.0)
    _, out, _ = run(capsys, "eval", "--t", "1", "--x", "2", "--y", "3", "--mu", "0")
    assert record(out)["inputs"]["mu"] == 0.0
    cfg.write_text("{not json")
    assert run(capsys, "eval", "--t", "1", "--x", "2", "--y", "3")[0] == 2
    monkeypatch.setenv("HK_CONFIG", str(tmp_path / "missing.json"))
    assert run(capsys, "eval", "--t", "1", "--x", "2", "--y", "3", "--method", "free")[0] == 5


# verify

def test_verify_bootstrap_rerun_and_fault(capsys, tmp_path):
    base = str(tmp_path / "v.json")
    grid = ["--grid", "t=0.001:1000000:6,x=1.001:1000:6,y=1.001:1000:6", "--baseline", base, *NT]
    assert run(capsys, "verify", *grid)[0] == 6
    assert run(capsys, "verify", *grid, "--update-baseline")[0] == 0
    assert os.path.exists(base)
    code, out, _ = run(capsys, "verify", *grid)
    assert code == 0 and record(out)["results"]["status"] == "pass"
    code, out, err = run(capsys, "verify", *grid, "--fault-scale", "1.0001")
    assert code == 4 and "violation" in err
    assert record(out)["results"]["inequalities"]["violations"]


# mc and hitting

MC_ARGS = ["mc", "--dim", "3", "--x", "2", "--t", "1", "--paths", "40000", "--dt", "0.005",
           "--seed", "7", *NT]


def test_mc_deterministic(capsys, monkeypatch):
    outs = []
    for threads in ("1", "1", "8"):
        monkeypatch.setenv("HK_THREADS", threads)
        code, out, _ = run(capsys, *MC_ARGS, "--hist", "10:4")
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1] == outs[2]
    rec = record(outs[0])
    assert rec["diagnostics"]["runtime_ms"] is None
    assert len(rec["results"]["histogram"]) == 10


def test_hitting_commands(capsys):
    _, out, _ = run(capsys, "hitting", "--x", "2", "--density", "1", "--lower")
    lower = record(out)["results"]["value"]
    _, out, _ = run(capsys, "hitting", "--x", "2", "--density", "1", "--oracle")
    oracle = record(out)["results"]["value"]
    assert lower <= oracle and oracle == pytest.approx(hitting.q_oracle(2.0, 1.0), rel=1e-14)
    _, out, _ = run(capsys, "hitting", "--x", "2", "--density", "1", "--profile")
    assert record(out)["results"]["value"] == pytest.approx(math.exp(-0.5) / math.sqrt(2))
    _, out, _ = run(capsys, "hitting", "--x", "2", "--survival", "4")
    assert record(out)["results"]["value"] == pytest.approx(hitting.survival_oracle(2.0, 4.0))


@pytest.mark.slow
def test_hitting_survival_agrees_with_mc(capsys):
    _, out, _ = run(capsys, "hitting", "--x", "2", "--survival", "4", "--oracle")
    exact = record(out)["results"]["value"]
    _, out, _ = run(capsys, "mc", "--dim", "2", "--x", "2", "--t", "4", "--paths", "200000",
                    "--seed", "3")
    surv = record(out)["results"]["survival"]
    assert abs(surv["estimate"] - exact) <= 3 * surv["stderr"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "besselheat", "eval", "--t", "1", "--x", "2",
                           "--y", "3", "--method", "free", "--no-timing"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"]["value"] == kernels.free_kernel(0.0, 1, 2, 3)
