"""Tests for the shiftlab command line."""
import json

import pytest

from shiftlab.cli.main import main
from shiftlab.cli.models import RunConfig, build_params
from shiftlab.cli.runners import EXIT_DOMAIN, EXIT_OK, EXIT_USAGE


def _last_error(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    return json.loads(err[-1])


def _read(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_classify_reports_nonanalytic(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["--output-dir", str(out), "--no-meta",
                 "classify", "--a0", "1", "--b0", "1", "--lambda", "2", "--y0", "1"])
    assert code == EXIT_OK
    report = _read(out / "report.json")
    assert report["verdict"]["class"] == "Nonanalytic"
    assert (out / "w_sequence.csv").exists()
    summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert summary["verdict"] == "Nonanalytic"


def test_classify_is_byte_identical_without_meta(tmp_path):
    args = ["classify", "--a0", "-2", "--b0", "1", "--lambda", "2", "--y0", "1"]
    assert main(["--output-dir", str(tmp_path / "a"), "--no-meta", *args]) == EXIT_OK
    assert main(["--output-dir", str(tmp_path / "b"), "--no-meta", *args]) == EXIT_OK
    first = (tmp_path / "a" / "report.json").read_bytes()
    assert first == (tmp_path / "b" / "report.json").read_bytes()
    assert json.loads(first)["verdict"]["class"] == "AnalyticCandidate"


def test_pn_prints_the_polynomial(tmp_path, capsys):
    assert main(["--output-dir", str(tmp_path), "pn", "--n", "1"]) == EXIT_OK
    assert capsys.readouterr().out.strip().splitlines()[0] == "z10 + z00*z01"
    assert _read(tmp_path / "pn.json")["ascii"] == "z10 + z00*z01"


def test_degenerate_delay_coefficient_is_a_domain_error(tmp_path, capsys):
    code = main(["--output-dir", str(tmp_path), "classify",
                 "--a0", "1", "--b0", "0", "--lambda", "2", "--y0", "1"])
    assert code == EXIT_DOMAIN
    assert _last_error(capsys)["error"] == "DegenerateLeadingCoefficient"


def test_infeasible_sine_delay_is_a_domain_error(tmp_path, capsys):
    code = main(["--output-dir", str(tmp_path), "eigen", "--lambda", "7.4", "--m", "1"])
    assert code == EXIT_DOMAIN
    assert _last_error(capsys)["error"] == "ConfigInfeasible"


def test_missing_parameter_is_a_usage_error(tmp_path, capsys):
    assert main(["--output-dir", str(tmp_path), "classify", "--a0", "1"]) == EXIT_USAGE
    assert _last_error(capsys)["error"] == "ValidationError"


def test_unknown_option_is_a_usage_error(tmp_path, capsys):
    assert main(["--output-dir", str(tmp_path), "pn", "--n", "1", "--bogus", "2"]) == EXIT_USAGE
    assert _last_error(capsys)["error"] == "NoSuchOption"


def test_unknown_key_in_parameter_file(tmp_path, capsys):
    params = tmp_path / "params.json"
    params.write_text(json.dumps({"n": 1, "colour": "red"}), encoding="utf-8")
    assert main(["--output-dir", str(tmp_path), "pn", "--config", str(params)]) == EXIT_USAGE
    assert "colour" in _last_error(capsys)["message"]


def test_flags_override_the_parameter_file(tmp_path):
    params = tmp_path / "params.json"
    params.write_text(json.dumps({"lambda": 7.0, "N": 12}), encoding="utf-8")
    out = tmp_path / "out"
    assert main(["--output-dir", str(out), "koenigs", "--config", str(params), "--N", "20"]) == EXIT_OK
    report = _read(out / "koenigs.json")
    assert report["params"]["N"] == 20
    assert report["conjugacy"]["residual"] <= 1e-9


def test_output_dir_from_environment(tmp_path, monkeypatch):
    target = tmp_path / "from_env"
    monkeypatch.setenv("SHIFTLAB_OUTPUT_DIR", str(target))
    assert main(["pn", "--n", "2"]) == EXIT_OK
    assert (target / "pn.json").exists()


def test_rigid_rotation_command(tmp_path):
    assert main(["--output-dir", str(tmp_path), "rotation", "--kind", "rigid", "--c", "0.5",
                 "--n-iter", "1000"]) == EXIT_OK
    omega = _read(tmp_path / "rotation.json")["rotation"]["omega"]
    assert omega == pytest.approx(0.5, abs=1e-3)


def test_sweep_runs_each_command_in_its_own_directory(tmp_path, capsys):
    runs = tmp_path / "runs.json"
    runs.write_text(json.dumps([
        {"command": "pn", "params": {"n": 1}},
        {"command": "classify", "params": {"a0": 1, "b0": 0, "lambda": 2, "y0": 1}},
    ]), encoding="utf-8")
    out = tmp_path / "sweep"
    code = main(["--output-dir", str(out), "--no-meta", "sweep", "--file", str(runs)])
    assert code == EXIT_DOMAIN
    summary = _read(out / "sweep.json")
    assert [r["exit_code"] for r in summary["runs"]] == [EXIT_OK, EXIT_DOMAIN]
    assert (out / "run_0" / "pn.json").exists()
    assert not (out / "run_1" / "report.json").exists()


def test_sweep_rejects_unknown_commands(tmp_path, capsys):
    runs = tmp_path / "runs.json"
    runs.write_text(json.dumps({"runs": [{"command": "plot"}]}), encoding="utf-8")
    assert main(["--output-dir", str(tmp_path), "sweep", "--file", str(runs)]) == EXIT_USAGE


def test_build_params_fills_config_defaults():
    params = build_params("coexist", {"lam": 7.4},
                          {"eigen_grid": 256, "w_order": 64, "fixed_point_grid": 1024})
    assert params.G == 256 and params.N == 64 and params.lam == 7.4
    assert params.fixed_point_grid == 1024
    with pytest.raises(ValueError):
        RunConfig(command="classify", params={}, extra=1)
