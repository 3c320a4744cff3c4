"""Command-line front end: configuration layering, outputs and exit codes."""

import json

import pytest

from binls import io
from binls.cli import main, resolve_config
from binls.errors import ConfigurationError
from binls.presets import PRESETS, get_preset


@pytest.fixture(autouse=True)
def outdir(tmp_path, monkeypatch):
    monkeypatch.setenv("B4NLS_OUTPUT_DIR", str(tmp_path))
    return tmp_path


def _summary(capsys):
    out = capsys.readouterr().out
    return json.loads(out)


def test_ground(outdir, capsys):
    assert main(["ground", "--alpha", "8", "--a", "1", "--b", "2", "--L", "10"]) == 0
    s = _summary(capsys)
    assert s["M"] == pytest.approx(2.465972485370718, rel=1e-8)
    run = outdir / "ground"
    snap = io.read_snapshot(run / "profile.b4nls")
    assert (snap.a, snap.b, snap.alpha) == (1.0, 2.0, 8.0)
    cfg = json.loads((run / "config.json").read_text())
    assert cfg["command"] == "ground" and cfg["N"] == 1024


def test_invalid_parameters_exit_1(capsys):
    assert main(["ground", "--alpha", "2", "--a", "2", "--b", "2"]) == 1
    assert "require b > a^2" in capsys.readouterr().err


def test_nonconvergence_exits_2():
    assert main(["ground", "--alpha", "8", "--a", "1", "--b", "2", "--L", "10", "--N", "256", "--max-newton-iters", "1"]) == 2


def test_numerical_failure_exits_3():
    argv = ["evolve", "--alpha", "8", "--kind", "gaussian", "--A", "3", "--L", "5", "--N", "256",
            "--t1", "1", "--n-steps", "2", "--energy-abort-rel", "1e300", "--linf-abort", "1e300"]
    assert main(argv) == 3


def test_unknown_flag_and_key_exit_1(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["ground", "--alpha", "8", "--bogus", "1"])
    assert info.value.code == 1
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"alpha": 8, "a": 1, "b": 2, "colour": "red"}))
    assert main(["ground", "--config", str(cfg)]) == 1
    cfg.write_text("[1, 2]")
    assert main(["ground", "--config", str(cfg)]) == 1
    assert main(["ground", "--config", str(tmp_path / "missing.json")]) == 1


def test_missing_required_exit_1(capsys):
    assert main(["ground", "--alpha", "8"]) == 1
    assert "missing" in capsys.readouterr().err


def test_bad_grid_exit_1():
    assert main(["ground", "--alpha", "8", "--a", "1", "--b", "2", "--N", "1000"]) == 1


def test_layering_order():
    file_cfg = {"preset": "soliton-test", "n_steps": 500, "t1": 0.5}
    cfg = resolve_config("evolve", None, file_cfg, {"n_steps": "100"})
    assert cfg["alpha"] == 8.0  # preset
    assert cfg["t1"] == 0.5  # file over preset
    assert cfg["n_steps"] == 100  # flag over file
    assert cfg["monitor_stride"] == 10  # default
    assert cfg["preset"] == "soliton-test"


def test_type_errors():
    with pytest.raises(ConfigurationError):
        resolve_config("ground", None, None, {"alpha": "eight", "a": "1", "b": "2"})
    with pytest.raises(ConfigurationError):
        resolve_config("evolve", None, {"alpha": 8, "nonlinearity": "maybe"})


def test_presets_are_valid():
    for name, p in PRESETS.items():
        cfg = resolve_config(p["command"], name)
        assert cfg["preset"] == name
    with pytest.raises(ConfigurationError):
        get_preset("fig-99")
    with pytest.raises(ConfigurationError):
        get_preset("fig-14", "sweep")


def test_exact(outdir, capsys):
    assert main(["exact", "--alpha", "8", "--a", "-13", "--L", "10"]) == 0
    s = _summary(capsys)
    assert s["b"] == pytest.approx(25.0)
    assert s["residual"] < 1e-12


def test_output_dir_flag(tmp_path):
    target = tmp_path / "elsewhere"
    assert main(["exact", "--alpha", "2", "--a", "-1", "--output-dir", str(target)]) == 0
    assert (target / "exact.b4nls").exists()


def test_soliton_preset(outdir, capsys):
    assert main(["evolve", "--preset", "soliton-test", "--t1", "0.1", "--n-steps", "200"]) == 0
    s = _summary(capsys)
    assert s["termination"] == "completed"
    assert s["soliton_error_sup"] < 1e-8
    assert (outdir / "soliton-test" / "trace.csv").exists()


def test_evolve_experiment(outdir, capsys):
    argv = ["evolve", "--alpha", "8", "--kind", "gaussian", "--A", "0.3", "--L", "20", "--N", "512",
            "--t1", "5", "--n-steps", "1000", "--experiment", "true"]
    assert main(argv) == 0
    assert _summary(capsys)["verdict"] == "disperse"


def test_sweep_range_in_parameter_flag(outdir, capsys):
    assert main(["sweep", "--alpha", "6", "--a", "1", "--b", "1:0.1:4"]) == 0
    s = _summary(capsys)
    assert s["samples"] == 30  # b = 1 = a^2 is dropped
    assert s["fold_param"] == pytest.approx(1.6)
    rows = (outdir / "sweep" / "branch.csv").read_text().splitlines()
    assert rows[0].startswith("param,b,a,alpha,M,E")


def test_sweep_two_ranges_rejected():
    assert main(["sweep", "--alpha", "6", "--a", "0:1:2", "--b", "1:0.1:4"]) == 1


def test_blowup_small(outdir, capsys):
    argv = ["blowup", "--alpha", "8", "--kind", "gaussian", "--A", "2.5", "--L", "2", "--N", "1024",
            "--h0", "1e-5", "--t-max", "0.1", "--h-min", "1e-8", "--q0-L", "10", "--q0-N", "1024"]
    assert main(argv) == 0
    s = _summary(capsys)
    assert s["termination"] == "energy_drift_abort"
    assert s["verdict"] in ("blowup", "fit_unreliable")
    assert (outdir / "blowup" / "report.json").exists()


def test_presets_listing(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    assert "fig-14" in out and "critical-a-neg2" in out
