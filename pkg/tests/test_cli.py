import json

import pytest

from mevboost_egta.cli import main


def _write_config(tmp_path, payload):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload))
    return path


def test_calibrate_prints_config(capsys):
    assert main(["calibrate"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["lambda_p"] == 8.75
    assert payload["private_value_mean"] == pytest.approx(7.3956e-4, rel=1e-3)


def test_calibrate_writes_file(tmp_path, capsys):
    assert main(["calibrate", "--out", str(tmp_path)]) == 0
    saved = json.loads((tmp_path / "signal_config.json").read_text())
    assert saved["lambda_e"] == pytest.approx(5.0035, rel=1e-3)


def test_invalid_config_file_is_exit_code_1(tmp_path):
    path = _write_config(tmp_path, {"n_sims": -3})
    assert main(["scenario", "--config", str(path)]) == 1


def test_invalid_alpha_flag_is_exit_code_1(tmp_path):
    config = _write_config(tmp_path, {"game_kinds": ["symmetric"], "n_sims": 1})
    assert main(["scenario", "--config", str(config), "--alpha", "wat",
                 "--out", str(tmp_path / "out")]) == 1


def test_scenario_symmetric_end_to_end(tmp_path):
    config = _write_config(tmp_path, {"game_kinds": ["symmetric"], "n_sims": 2, "workers": 1})
    out = tmp_path / "out"
    assert main(["scenario", "--config", str(config), "--out", str(out), "--seed", "5"]) == 0
    assert (out / "summary.csv").exists()
    assert (out / "manifest.json").exists()
    assert (out / "sweep_symmetric.csv").exists()


def test_hpt_then_solve_then_report_compose(tmp_path):
    config = _write_config(tmp_path, {"n_sims": 2, "workers": 1})
    out = tmp_path / "artifacts"
    assert main(["hpt", "--config", str(config), "--game", "orderflow", "--param", "0.5",
                 "--out", str(out)]) == 0
    hpt_path = out / "hpt_orderflow_050.csv"
    assert hpt_path.exists()
    assert main(["solve", "--hpt", str(hpt_path), "--sidecar", str(out / "hpt_orderflow_050.json"),
                 "--alpha", "bound"]) == 0
    assert (out / "stationary_orderflow_050.csv").exists()
    assert main(["report", "--dir", str(out)]) == 0
    summary = (out / "summary.csv").read_text().splitlines()
    assert len(summary) == 2
    assert summary[1].startswith("orderflow_roles,0.5,")


def test_report_round_trips_summary_byte_identically(tmp_path):
    config = _write_config(tmp_path, {"game_kinds": ["symmetric"], "n_sims": 2, "workers": 1})
    out = tmp_path / "out"
    assert main(["scenario", "--config", str(config), "--out", str(out)]) == 0
    original = (out / "summary.csv").read_bytes()
    assert main(["report", "--dir", str(out)]) == 0
    assert (out / "summary.csv").read_bytes() == original


def test_report_on_empty_dir_fails(tmp_path):
    assert main(["report", "--dir", str(tmp_path)]) == 1


def test_solve_with_fixed_alpha(tmp_path):
    config = _write_config(tmp_path, {"n_sims": 2, "workers": 1})
    out = tmp_path / "artifacts"
    assert main(["hpt", "--config", str(config), "--game", "symmetric", "--out", str(out)]) == 0
    assert main(["solve", "--hpt", str(out / "hpt_symmetric.csv"), "--alpha", "2.5"]) == 0
    rows = (out / "stationary_symmetric.csv").read_text().splitlines()
    assert rows[0] == "profile_id,profile_counts,mass,alpha"
    assert rows[1].endswith(",2.5")


def test_runtime_failure_is_exit_code_2(tmp_path, monkeypatch):
    import mevboost_egta.cli as cli_mod

    def explode(config, kind, index, param):
        raise RuntimeError("boom")

    monkeypatch.setattr("mevboost_egta.experiment.run_single_scenario", explode)
    config = _write_config(tmp_path, {"game_kinds": ["symmetric"], "n_sims": 1})
    assert main(["scenario", "--config", str(config), "--out", str(tmp_path / "out")]) == 2
