"""Command-line interface: configs, outputs, exit codes, reproducibility."""

import json
import math
import subprocess
import sys

import pytest

from vee_ww_sim.cli import main, read_table


def run(argv):
    return main(argv)


def test_weak_value_json(tmp_path):
    out = tmp_path / "wv.json"
    assert run(["weak-value", "--epsilon", str(math.pi / 4), "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["re"] == pytest.approx(0.0, abs=1e-12)
    assert payload["im"] == pytest.approx(-1.0, rel=1e-12)
    assert payload["config"]["mode"] == "weak-value"
    assert payload["config"]["params"]["epsilon"] == pytest.approx(math.pi / 4)


def test_weak_value_orthogonal_exit_code(tmp_path, capsys):
    rc = run(["weak-value", "--epsilon", "0", "--out", str(tmp_path / "x.json")])
    assert rc == 3
    assert "overlap" in capsys.readouterr().err


def test_missing_epsilon_is_config_error(tmp_path):
    assert run(["weak-value", "--out", str(tmp_path / "x.json")]) == 2


def test_tau_curve_preset(tmp_path):
    out = tmp_path / "tc.csv"
    assert run(["tau-curve", "--config", "fig2", "--out", str(out)]) == 0
    raw = out.read_bytes()
    assert b"\r" not in raw  # LF-only line endings
    assert raw.decode().splitlines()[0].startswith("# config: ")
    cfg, cols, rows = read_table(out)
    assert cols == ["epsilon", "tau_gamma", "rate_over_gamma", "physical"]
    assert cfg["params"]["delta_over_gamma"] == 0.1
    assert len(rows) == 200
    taus = [r[1] for r in rows]
    assert all(b < a for a, b in zip(taus, taus[1:]))
    assert all(r[3] == 1.0 for r in rows)  # the preset grid starts above threshold


def test_tau_curve_preset_shifts_with_delta(tmp_path):
    out3 = tmp_path / "tc3.csv"
    assert run(["tau-curve", "--config", "fig3", "--out", str(out3)]) == 0
    _, _, rows = read_table(out3)
    assert rows[0][0] == pytest.approx(0.011)
    assert rows[0][1] == pytest.approx(11.0, rel=1e-9)


def test_tau_curve_rerun_byte_identical(tmp_path):
    out = tmp_path / "rerun.csv"
    argv = ["tau-curve", "--config", "fig2", "--out", str(out)]
    assert run(argv) == 0
    first = out.read_bytes()
    assert run(argv) == 0
    assert out.read_bytes() == first


def test_tau_curve_roundtrip_regenerates_identically(tmp_path):
    # the config echoed into the file is enough to reproduce it exactly
    first = tmp_path / "first.csv"
    assert run(["tau-curve", "--config", "fig2", "--out", str(first)]) == 0
    cfg, _, _ = read_table(first)
    cfg_file = tmp_path / "echo.json"
    cfg.pop("mode")
    cfg["out"] = str(tmp_path / "second.csv")
    cfg_file.write_text(json.dumps(cfg))
    assert run(["tau-curve", "--config", str(cfg_file)]) == 0
    first_body = first.read_bytes().split(b"\n", 1)[1]
    second_body = (tmp_path / "second.csv").read_bytes().split(b"\n", 1)[1]
    assert first_body == second_body


def test_tau_curve_cross_form(tmp_path):
    out = tmp_path / "forms.csv"
    base = ["tau-curve", "--delta-over-gamma", "0.1", "--out", str(out)]
    cfgf = tmp_path / "grid.json"
    cfgf.write_text(json.dumps({"grid": {"values": [0.2]}}))
    assert run(base + ["--config", str(cfgf), "--form", "small"]) == 0
    _, _, rows = read_table(out)
    assert rows[0][1] == pytest.approx(2.0, rel=1e-12)
    assert run(base + ["--config", str(cfgf), "--form", "cot"]) == 0
    _, _, rows = read_table(out)
    assert rows[0][1] == pytest.approx(1.0 / (1.0 - 0.1 * math.cos(0.2) / math.sin(0.2)),
                                       rel=1e-12)


def test_tau_curve_cross_delta(tmp_path):
    # at a shared angle, the smaller splitting amplifies less
    out = tmp_path / "cross.csv"
    cfgf = tmp_path / "grid.json"
    cfgf.write_text(json.dumps({"grid": {"values": [0.2]}}))
    taus = {}
    for ratio in ("0.01", "0.1"):
        assert run(["tau-curve", "--config", str(cfgf), "--form", "small",
                    "--delta-over-gamma", ratio, "--out", str(out)]) == 0
        _, _, rows = read_table(out)
        taus[ratio] = rows[0][1]
    assert taus["0.01"] == pytest.approx(1.0 / 0.95, rel=1e-12)
    assert taus["0.1"] == pytest.approx(2.0, rel=1e-12)
    assert taus["0.01"] < taus["0.1"]


def test_grid_log_spacing_needs_positive_min(tmp_path):
    cfgf = tmp_path / "grid.json"
    cfgf.write_text(json.dumps({"grid": {"min": 0.0, "max": 1.0, "count": 5,
                                         "spacing": "log"}}))
    assert run(["tau-curve", "--config", str(cfgf),
                "--out", str(tmp_path / "x.csv")]) == 2


def test_tau_curve_plot(tmp_path):
    out, svg = tmp_path / "tc.csv", tmp_path / "tc.svg"
    assert run(["tau-curve", "--config", "fig2", "--out", str(out),
                "--plot", str(svg)]) == 0
    body = svg.read_text()
    assert body.startswith("<svg")
    assert "config:" in body and "polyline" in body


def test_mc_below_threshold_names_the_boundary(tmp_path, capsys):
    rc = run(["mc", "--epsilon", "0.05", "--delta-over-gamma", "0.1",
              "--out", str(tmp_path / "mc.csv")])
    assert rc == 3
    assert "0.1" in capsys.readouterr().err  # message points at the threshold angle


def test_mc_outputs(tmp_path):
    out = tmp_path / "mc.csv"
    assert run(["mc", "--epsilon", "0.2", "--n", "500", "--seed", "7",
                "--out", str(out)]) == 0
    cfg, cols, rows = read_table(out)
    assert cols == ["t_over_gamma_inv"]
    assert len(rows) == 500
    assert cfg["mc"]["seed"] == 7
    summary = json.loads((tmp_path / "mc.summary.json").read_text())
    assert summary["n"] == 500
    assert sum(summary["counts"]) == 500
    assert len(summary["bins"]) == len(summary["counts"]) + 1
    assert summary["config"]["mc"]["n"] == 500
    assert summary["mean"] == pytest.approx(2.0, rel=0.2)


def test_mc_conditional_model(tmp_path):
    out = tmp_path / "cond.csv"
    cfgf = tmp_path / "cond.json"
    cfgf.write_text(json.dumps({"mc": {"model": "conditional", "n": 2000},
                                "params": {"epsilon": 0.3}}))
    assert run(["mc", "--config", str(cfgf), "--out", str(out)]) == 0
    summary = json.loads((tmp_path / "cond.summary.json").read_text())
    assert 0.0 < summary["acceptance_rate"] <= 1.0
    assert summary["mean"] == pytest.approx(0.6957658188758089, rel=0.1)


def test_evolve_csv(tmp_path):
    out = tmp_path / "ev.csv"
    cfgf = tmp_path / "ev.json"
    cfgf.write_text(json.dumps({"bath": {"cutoff_over_gamma": 25.0, "n_modes": 1024,
                                         "t_end_gamma": 1.0}}))
    assert run(["evolve", "--epsilon", "0.2", "--config", str(cfgf),
                "--out", str(out)]) == 0
    cfg, cols, rows = read_table(out)
    assert cols == ["t", "alpha_re", "alpha_im", "survival"]
    assert rows[0][0] == 0.0 and rows[0][3] == 1.0
    assert rows[-1][3] < 1.0
    assert cfg["bath"]["engine"] == "modes"


def test_evolve_dt_guard_exit_code(tmp_path):
    cfgf = tmp_path / "bad.json"
    cfgf.write_text(json.dumps({"bath": {"dt_gamma": 0.5}}))
    rc = run(["evolve", "--epsilon", "0.2", "--config", str(cfgf),
              "--out", str(tmp_path / "x.csv")])
    assert rc == 4


def test_config_validation_exit_codes(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["tau-curve", "--config", str(bad)]) == 2

    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"bogus": 1}))
    assert run(["tau-curve", "--config", str(unknown)]) == 2

    clash = tmp_path / "clash.json"
    clash.write_text(json.dumps({"mode": "evolve"}))
    assert run(["tau-curve", "--config", str(clash)]) == 2

    both = tmp_path / "both.json"
    both.write_text(json.dumps({
        "params": {"delta_over_gamma": 0.1, "epsilon": 0.3},
        "si": {"omega": 2.416e15, "eta": 2.537e-29, "delta": 3.8e6},
    }))
    assert run(["weak-value", "--config", str(both), "--out", str(tmp_path / "x.json")]) == 2


def test_si_block_adds_seconds_column(tmp_path):
    out = tmp_path / "si.csv"
    cfgf = tmp_path / "si.json"
    cfgf.write_text(json.dumps({
        "si": {"omega": 2.416e15, "eta": 2.537e-29, "delta": 3.8e6},
        "grid": {"values": [0.3, 0.5]},
    }))
    assert run(["tau-curve", "--config", str(cfgf), "--out", str(out)]) == 0
    _, cols, rows = read_table(out)
    assert cols[-1] == "tau_seconds"
    gamma_si = 38280146.999290983
    assert rows[0][4] == pytest.approx(rows[0][1] / gamma_si, rel=1e-12)


def test_compare_joins_three_routes(tmp_path):
    out = tmp_path / "cmp.csv"
    cfgf = tmp_path / "cmp.json"
    cfgf.write_text(json.dumps({"grid": {"values": [0.3, 0.5]},
                                "mc": {"n": 5000}}))
    assert run(["compare", "--config", str(cfgf), "--delta-over-gamma", "0.1",
                "--out", str(out)]) == 0
    _, cols, rows = read_table(out)
    assert cols == ["epsilon", "rate_markov", "rate_bath_fit", "rate_mc",
                    "dev_bath", "dev_mc", "physical"]
    for row in rows:
        assert row[6] == 1.0
        assert abs(row[4]) < 0.05 and abs(row[5]) < 0.05


def test_module_entry_point(tmp_path):
    out = tmp_path / "wv.json"
    proc = subprocess.run(
        [sys.executable, "-m", "vee_ww_sim", "weak-value",
         "--epsilon", "0.5", "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "wrote" in proc.stdout
    assert json.loads(out.read_text())["im"] == pytest.approx(
        -math.cos(0.5) / math.sin(0.5), rel=1e-12)
