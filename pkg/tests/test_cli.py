import json

import numpy as np
import pytest

from horseshoe import presets
from horseshoe.cli import load_config, main, run_certify
from horseshoe.errors import ConfigError
from horseshoe.switching import SwitchingSchedule


def test_periods_harmonic(tmp_path, capsys):
    code = main(["periods", "--preset", "harmonic", "--grid", "9",
                 "--out", str(tmp_path)])
    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    periods = report["subsystems"][0]["boundary_periods"]
    np.testing.assert_allclose(periods, [2 * np.pi, 2 * np.pi], rtol=1e-9)
    prof = np.loadtxt(tmp_path / "profile_1.csv", delimiter=",", skiprows=1)
    assert prof.shape[0] == 9
    np.testing.assert_allclose(prof[:, 2], 2 * np.pi, rtol=1e-8)


def test_missing_config_is_usage_error(capsys):
    assert main(["periods", "--config", "/nonexistent/cfg.json"]) == 1
    assert main(["certify", "--preset", "no-such-preset"]) == 1
    assert main(["certify"]) == 1  # neither --config nor --preset


def test_config_file_loading(tmp_path):
    cfg = presets.harmonic()
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    code = main(["periods", "--config", str(path), "--grid", "5",
                 "--out", str(tmp_path)])
    assert code == 0


def test_out_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("HORSESHOE_OUT", str(tmp_path / "env_out"))
    assert main(["periods", "--preset", "harmonic", "--grid", "5"]) == 0
    assert (tmp_path / "env_out" / "report.json").exists()


def test_simulate_zero_horizon(tmp_path):
    code = main(["simulate", "--preset", "toy", "--x0", "2.0", "0.0",
                 "--horizon", "0", "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "orbit.csv").read_text().splitlines()
    assert lines[0] == "t,x,y,phase" and len(lines) == 2
    # empty switch table still has its header
    assert (tmp_path / "switches.csv").read_text().splitlines()[0] == "t,x,y"


def test_certify_isochronous_pair_exits_monotonicity(tmp_path, capsys):
    code = main(["certify", "--preset", "harmonic-pair",
                 "--out", str(tmp_path)])
    assert code == 5
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["verdict"] == "failed:monotonicity"


def test_certify_short_dwell_exits_blocks(toy):
    resolved = dict(toy)
    # one characteristic time short of the guaranteed winding gap
    resolved["schedule"] = SwitchingSchedule(24 * np.pi, 36 * np.pi)
    rep, artifacts = run_certify(resolved, no_witness=False)
    assert rep.exit_code == 7
    assert rep.verdict == "failed:blocks"
    assert "witness" not in artifacts


def test_certify_needs_two_subsystems():
    resolved = load_config(presets.harmonic())
    with pytest.raises((ConfigError, ValueError)):
        run_certify(resolved)


def test_load_config_rejects_bad_schema():
    with pytest.raises(ConfigError):
        load_config({"subsystems": []})
    bad = presets.toy()
    bad["subsystems"][0] = {"general": {"fx": "-y"}}  # missing fy/center
    with pytest.raises(ConfigError):
        load_config(bad)
