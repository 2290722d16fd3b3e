import json
import subprocess
import sys

import pytest

from mtensor.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_toy_exit_zero(capsys):
    code, out, _ = run(["toy"], capsys)
    assert code == 0
    assert "-0.588" in out and "1.647" in out and "0.647" in out
    assert "1.706" in out
    assert "FAIL" not in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mtensor", "toy"], capture_output=True, text=True)
    assert proc.returncode == 0


def test_selftest(capsys):
    code, out, _ = run(["selftest"], capsys)
    assert code == 0
    assert out.count("[PASS]") >= 4


def test_selftest_needs_200(capsys):
    code, _, _ = run(["selftest", "--instances", "10"], capsys)
    assert code == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["rosenbrock", "--n", "1"],
        ["rosenbrock", "--n", "3", "--alpha", "0"],
        ["rosenbrock", "--n", "3", "--reg", "lasso:1"],
        ["rosenbrock", "--n", "3", "--reg", "tikhonov:-2"],
        ["kuramoto", "--n", "1"],
        ["kuramoto", "--n", "3", "--models", "svd"],
        ["lorenz", "--dt", "0"],
    ],
)
def test_usage_errors_write_nothing(argv, tmp_path, capsys):
    out = tmp_path / "out"
    code, _, err = run(argv + ["--out", str(out)], capsys)
    assert code == 2
    assert "error" in err
    assert not out.exists()


def test_unknown_flag_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["rosenbrock", "--bogus"])
    assert exc.value.code == 2


def test_rosenbrock_writes_report(tmp_path, capsys):
    code, _, _ = run(["rosenbrock", "--n", "4", "--alpha", "10", "--out", str(tmp_path)], capsys)
    assert code == 0
    rep = json.loads((tmp_path / "rosenbrock_report.json").read_text())
    assert rep["model"]["m"] == 40
    assert rep["config"]["n"] == 4


def test_tikhonov_zero_equals_ls(tmp_path, capsys):
    errs = []
    for reg in ("ls", "tikhonov:0"):
        d = tmp_path / reg.replace(":", "_")
        assert main(["rosenbrock", "--n", "3", "--alpha", "10", "--reg", reg, "--out", str(d)]) == 0
        errs.append(json.loads((d / "rosenbrock_report.json").read_text())["errors"])
    capsys.readouterr()
    assert errs[0] == pytest.approx(errs[1], rel=1e-8)


def test_env_output_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("MTENSOR_OUT", str(tmp_path / "envout"))
    assert main(["rosenbrock", "--n", "3", "--alpha", "5"]) == 0
    capsys.readouterr()
    assert (tmp_path / "envout" / "rosenbrock_report.json").exists()


def test_config_merge_flags_win(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 5, "alpha": 6, "seed": 9}))
    out = tmp_path / "o"
    assert main(["rosenbrock", "--config", str(cfg), "--alpha", "4", "--out", str(out)]) == 0
    capsys.readouterr()
    rep = json.loads((out / "rosenbrock_report.json").read_text())
    assert rep["config"]["n"] == 5
    assert rep["config"]["alpha"] == 4
    assert rep["seed"] == 9


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dimension": 5}))
    code, _, err = run(["rosenbrock", "--config", str(cfg), "--out", str(tmp_path / "o")], capsys)
    assert code == 2 and "dimension" in err


def test_numerical_failure_exit_three(tmp_path, capsys):
    # scale 1e-7 squashes degree-4 monomials onto the constant: singular Gram
    code, _, err = run(["rosenbrock", "--n", "20", "--alpha", "5", "--scale", "1e-7", "--out", str(tmp_path)], capsys)
    assert code == 3
    assert "numerical failure" in err


def test_lorenz_short(tmp_path, capsys):
    argv = ["lorenz", "--rollout-steps", "500", "--n-random-ic", "2", "--out", str(tmp_path)]
    code, out, _ = run(argv, capsys)
    assert code == 0
    assert len(list(tmp_path.glob("lorenz_*.csv"))) == 4
    assert "least_squares" in out


def test_kuramoto_short(tmp_path, capsys):
    argv = ["kuramoto", "--n", "3", "--repeats", "2", "--rollout-steps", "200", "--out", str(tmp_path)]
    code, _, _ = run(argv, capsys)
    assert code == 0
    rep = json.loads((tmp_path / "kuramoto_n3_report.json").read_text())
    assert len(rep["extra"]["models"]["ls"]["runs"]) == 2
    assert {"error_min", "error_mean", "error_max"} <= set(rep["extra"]["models"]["ali"])
