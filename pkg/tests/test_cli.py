import json
import subprocess
import sys

import numpy as np
import pytest

from fkgravity import load_config, run_experiment, run_sweep
from fkgravity.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from fkgravity.experiments import COLUMNS, read_points_csv

SMALL = """
name = "small"
[scene]
radius_m = 1000.0
[[scene.prisms]]
min_m = [-50.0, -50.0, -50.0]
max_m = [50.0, 50.0, 50.0]
density = 2000.0
[layout]
kind = "grid"
origin_m = [-60.0, 0.0, 60.0]
axes = [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]
counts = [3, 5]
spacings_m = [60.0, 5.0]
[walker]
dt = 0.01
[estimator]
n_walks = 300
seed = 4
[analysis]
acceleration = true
smooth_window = 3
[sweep]
dt = [0.02, 0.01]
n_walks = [100, 200]
"""


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(SMALL)
    return p


def _run(args):
    return main([str(a) for a in args])


def test_run_writes_report_with_units(cfg_path, tmp_path, capsys):
    out = tmp_path / "out"
    assert _run(["run", "--config", cfg_path, "--out", out, "-q"]) == EXIT_OK
    header = (out / "points.csv").read_text().splitlines()[0].split(",")
    assert tuple(header) == COLUMNS
    assert all(h.endswith(("_m", "_SI")) for h in header)
    report = json.loads((out / "report.json").read_text())
    assert report["summary"]["n_points"] == 15
    assert "rms_gz_smooth_rel" in report["summary"]
    meta = json.loads((out / "run_meta.json").read_text())
    assert meta["timing"]["workers"] == 1 and "numba" in meta["environment"]
    assert "rms_u_rel" in capsys.readouterr().out


def test_csv_round_trip_is_exact(cfg_path, tmp_path):
    cfg = load_config(str(cfg_path), {"output.dir": str(tmp_path / "rt")})
    report = run_experiment(cfg)
    back = read_points_csv(tmp_path / "rt" / "points.csv")
    for col in COLUMNS:
        ours = np.array([np.nan if r[col] is None else r[col] for r in report.rows])
        np.testing.assert_array_equal(back[col], ours)
    # g_z exists on interior rows only
    assert np.isnan(back["gz_num_SI"][:3]).all() and not np.isnan(back["gz_num_SI"][3:12]).any()


def test_reports_are_byte_identical_across_worker_counts(cfg_path, tmp_path):
    for k, w in enumerate((1, 4, 1)):
        assert _run(["run", "--config", cfg_path, "--workers", w, "--out", tmp_path / f"w{k}", "-q"]) == 0
    for name in ("points.csv", "report.json"):
        ref = (tmp_path / "w0" / name).read_bytes()
        assert (tmp_path / "w1" / name).read_bytes() == ref
        assert (tmp_path / "w2" / name).read_bytes() == ref


def test_overrides_reach_the_echo(cfg_path, tmp_path):
    out = tmp_path / "o"
    args = ["run", "--config", cfg_path, "--out", out, "--dt", "0.02", "--walks", "50", "--seed", "7",
            "--precision", "single", "--bridge", "on", "--smooth-window", "5", "-q"]
    assert _run(args) == 0
    echo = json.loads((out / "report.json").read_text())["config"]
    assert echo["walker"] == {"dt": 0.02, "bridge": True, "max_steps": echo["walker"]["max_steps"],
                              "exit_rule": "full"}
    assert echo["estimator"]["n_walks"] == 50 and echo["estimator"]["seed"] == 7
    assert echo["estimator"]["precision"] == "single"
    assert echo["analysis"]["smooth_window"] == 5
    assert "workers" not in echo["estimator"]


def test_json_format(cfg_path, tmp_path):
    out = tmp_path / "j"
    assert _run(["run", "--config", cfg_path, "--out", out, "--format", "json", "-q"]) == 0
    doc = json.loads((out / "points.json").read_text())
    assert len(doc["rows"]) == 15 and doc["units"]["u_num_SI"] == "m^2/s^2"


def test_oracle_only(cfg_path, tmp_path):
    for args in (["oracle"], ["run", "--oracle-only"]):
        out = tmp_path / args[0]
        assert _run(args + ["--config", cfg_path, "--out", out, "-q"]) == 0
        back = read_points_csv(out / "points.csv")
        assert np.isnan(back["u_num_SI"]).all() and (back["u_truth_SI"] > 0).all()
        assert not np.isnan(back["gz_truth_SI"][3:12]).any()


def test_sweep_table(cfg_path, tmp_path):
    cfg = load_config(str(cfg_path), {"output.dir": str(tmp_path / "s")})
    table = run_sweep(cfg)
    assert table.wall_time.shape == (2, 2) and np.all(table.wall_time > 0)
    assert table.mean_steps[1, 0] > 1.5 * table.mean_steps[0, 0]
    text = (tmp_path / "s" / "sweep.txt").read_text()
    assert "wall time (s)" in text and "RMS" in text
    assert len((tmp_path / "s" / "sweep.csv").read_text().splitlines()) == 5


def test_one_by_one_sweep_matches_experiment(cfg_path, tmp_path):
    cfg = load_config(str(cfg_path), {"output.dir": str(tmp_path / "one")})
    cfg.sweep_dt, cfg.sweep_n_walks = [cfg.walker.dt], [cfg.estimator.n_walks]
    table = run_sweep(cfg, write=False)
    report = run_experiment(cfg, write=False)
    assert table.rms[0, 0] == report.summary["rms_u_rel"]


def test_exit_code_for_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(SMALL.replace("dt = 0.01", ""))
    assert _run(["run", "--config", bad]) == EXIT_CONFIG
    assert "walker.dt required" in capsys.readouterr().err
    assert _run(["run", "--config", tmp_path / "missing.cfg"]) == EXIT_CONFIG
    with pytest.raises(SystemExit) as info:
        _run(["run", "--config", bad, "--smooth-window", "4"])
    assert info.value.code == EXIT_CONFIG


def test_exit_code_for_runtime_errors(cfg_path, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert _run(["run", "--config", cfg_path, "--out", blocker, "--walks", "10", "-q"]) == EXIT_RUNTIME


def test_show_config(capsys):
    assert _run(["show-config", "exp1"]) == 0
    assert "n_walks = 51200" in capsys.readouterr().out


def test_console_script_is_installed(tmp_path):
    res = subprocess.run([sys.executable, "-m", "fkgravity.cli", "oracle", "--config", "exp1",
                          "--out", str(tmp_path / "e1"), "-q"], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    back = read_points_csv(tmp_path / "e1" / "points.csv")
    assert len(back["x_m"]) == 31
