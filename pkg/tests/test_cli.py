"""Command-line interface: determinism, exit codes, config merging."""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from waveguide_scatter import (
    exp_pair_channel_values,
    load_grid_csv,
    make_exponential_profile,
    make_product_wavepacket,
    reflection_probability_closed,
)
from waveguide_scatter.cli import main


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_reflect_runs_are_byte_identical(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    args = ["reflect", "--n-list", "1,2,3", "--gamma", "2"]
    assert main(args + ["-o", str(a)]) == 0
    assert main(args + ["-o", str(b)]) == 0
    assert _read(a) == _read(b)
    assert _read(a).count(b"\n") == 4  # header plus one row per n


def test_reflect_values_match_closed_form(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["reflect", "--n-list", "1,2", "--gamma", "2",
                 "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,gamma,closed"
    row1 = lines[1].split(",")
    assert int(row1[0]) == 1
    assert float(row1[2]) == pytest.approx(reflection_probability_closed(1, 2.0),
                                           rel=1e-10)
    row2 = lines[2].split(",")
    assert float(row2[2]) == pytest.approx(0.0625, rel=1e-10)


def test_reflect_numeric_column(tmp_path):
    out = tmp_path / "rn.csv"
    assert main(["reflect", "--n-list", "1,2", "--gamma", "1", "--numeric",
                 "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,gamma,closed,numeric,abs_err"
    for line in lines[1:]:
        cols = line.split(",")
        assert float(cols[4]) <= 1e-7


def test_excite_trace_spot_value(tmp_path):
    out = tmp_path / "e.csv"
    assert main(["excite", "--photons", "1", "--gamma", "2",
                 "--t-max", "2", "--points", "5", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,p_excited"
    t_vals = [float(l.split(",")[0]) for l in lines[1:]]
    p_vals = [float(l.split(",")[1]) for l in lines[1:]]
    assert t_vals == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert p_vals[2] == pytest.approx(2.0 * math.exp(-2.0), abs=1e-9)


def test_two_photon_grid_round_trips(tmp_path):
    out = tmp_path / "grid.csv"
    assert main(["two-photon", "--gamma", "1", "--channel", "RR",
                 "--t", "4", "--tau-max", "3", "--tau-points", "5",
                 "-o", str(out)]) == 0
    grid = load_grid_csv(out, tmp_path / "grid.json")
    assert grid.channel == "RR"
    assert grid.dynamical_time == 4.0
    p = make_exponential_profile(1.0)
    w = make_product_wavepacket([(p, "R"), (p, "R")])
    ax = grid.axes[0]
    direct = exp_pair_channel_values(w, "RR", ax[:, None], ax[None, :], 4.0)
    np.testing.assert_allclose(grid.values, direct, atol=1e-9)


def test_two_photon_all_channels_write_suffixed_files(tmp_path):
    out = tmp_path / "chan.csv"
    assert main(["two-photon", "--gamma", "1", "--channel", "all",
                 "--t", "3", "--tau-max", "2", "--tau-points", "3",
                 "-o", str(out)]) == 0
    for ch in ("LL", "RL", "RR"):
        grid = load_grid_csv(tmp_path / f"chan_{ch}.csv",
                             tmp_path / f"chan_{ch}.json")
        assert grid.channel == ch


def test_two_photon_requires_file_output(capsys):
    assert main(["two-photon", "--gamma", "1", "-o", "-"]) == 2
    assert "error" in capsys.readouterr().err


def test_figure3_closed_sweep(tmp_path):
    out = tmp_path / "f3.csv"
    assert main(["figure3", "--n-list", "1,2", "--gamma-grid",
                 "log:0.1:10:5", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,gamma,closed"
    assert len(lines) == 11
    vals = {}
    for line in lines[1:]:
        n, g, c = line.split(",")
        vals.setdefault(int(n), []).append(float(c))
    for n, series in vals.items():
        assert all(a > b for a, b in zip(series, series[1:]))


def test_config_file_merges_under_flags(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"gamma": 2.0, "n_list": "1"}))
    out = tmp_path / "out.csv"
    assert main(["reflect", "--config", str(cfg), "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2
    assert float(lines[1].split(",")[2]) == pytest.approx(0.5, rel=1e-10)
    # explicit flags win over the config file
    assert main(["reflect", "--config", str(cfg), "--gamma", "6",
                 "-o", str(out)]) == 0
    assert float(out.read_text().splitlines()[1].split(",")[2]) == (
        pytest.approx(0.25, rel=1e-10))


def test_config_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"gamma": 2.0, "bogus_key": 1}))
    assert main(["reflect", "--config", str(cfg)]) == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_config_rejects_malformed_json(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    assert main(["reflect", "--config", str(cfg)]) == 2
    assert "error" in capsys.readouterr().err


def test_bad_axis_spec_exits_2(capsys):
    assert main(["figure3", "--gamma-grid", "bogus", "-o", "-"]) == 2
    capsys.readouterr()


def test_bad_photon_list_exits_2(capsys):
    assert main(["reflect", "--n-list", "0,2", "-o", "-"]) == 2
    capsys.readouterr()


def test_unknown_command_exits_via_argparse(capsys):
    with pytest.raises(SystemExit):
        main(["no-such-command"])
    capsys.readouterr()


def test_validate_single_photon_passes(tmp_path):
    out = tmp_path / "v.json"
    assert main(["validate", "--suite", "single-photon", "--gamma", "1",
                 "-o", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["passed"] is True
    assert payload["abs_err"] <= 1e-6
    assert payload["reversal_closed"] == pytest.approx(2.0 / 3.0, abs=1e-12)


def test_validate_two_photon_bridge_small(tmp_path):
    out = tmp_path / "b.json"
    assert main(["validate", "--suite", "two-photon-bridge", "--gamma", "1",
                 "--omega-min", "-3", "--omega-max", "3",
                 "--omega-points", "12", "--time-points", "1024",
                 "-o", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["passed"] is True
    assert set(payload["channels"]) == {"LL", "RL", "RR"}


def test_validate_unknown_suite_exits_2(capsys):
    assert main(["validate", "--suite", "nope"]) == 2
    assert "unknown validation suite" in capsys.readouterr().err


def test_stdout_sink(capsys):
    assert main(["reflect", "--n-list", "1", "--gamma", "2", "-o", "-"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "n,gamma,closed"
    assert "5.00000000000e-01" in out


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "waveguide_scatter.cli", "reflect",
         "--n-list", "1", "--gamma", "2", "-o", "-"],
        capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "n,gamma,closed"
