import pytest

from fkgravity import ConfigError, load_config, validate_config
from fkgravity.config import BUNDLED, bundled_config_text

MINIMAL = """
[scene]
radius_m = 1000.0
[[scene.prisms]]
min_m = [0.0, 0.0, 0.0]
max_m = [100.0, 100.0, 100.0]
density = 2000.0
[layout]
kind = "line"
origin_m = [0.0, 0.0, 200.0]
axis = [1.0, 0.0, 0.0]
count = 3
spacing_m = 10.0
[walker]
dt = 0.01
[estimator]
n_walks = 100
"""


def test_minimal_config_echoes_every_default():
    cfg = validate_config(MINIMAL, "mini")
    e = cfg.echo
    assert e["walker"]["bridge"] is False
    assert e["analysis"]["smooth_window"] == 5
    assert e["estimator"]["precision"] == "double"
    assert e["estimator"]["seed"] == 0 and e["estimator"]["workers"] == 1
    assert e["estimator"]["truncation_policy"] == "drop_and_report"
    assert e["scene"]["length_scale_m"] == 1000.0
    assert e["scene"]["gravitational_constant"] == 6.674e-11
    assert e["walker"]["max_steps"] == cfg.walker.resolve_max_steps(1.0)
    assert e["walker"]["exit_rule"] == "full"
    assert e["output"] == {"dir": "results/mini", "format": "csv"}
    assert e["sweep"] == {"dt": [0.01], "n_walks": [100]}


def test_missing_dt_is_reported_by_field():
    text = MINIMAL.replace("dt = 0.01", "")
    with pytest.raises(ConfigError) as info:
        validate_config(text)
    assert "walker.dt required" in info.value.errors


def test_prism_outside_ball_names_its_index():
    text = MINIMAL + """
[[scene.prisms]]
min_m = [900.0, 0.0, 0.0]
max_m = [950.0, 500.0, 10.0]
density = 1.0
"""
    text = text.replace("[layout]", "[[scene.prisms]]\nmin_m = [0.0, 0.0, 0.0]\nmax_m = [1.0, 1.0, 1.0]\ndensity = 1.0\n\n[layout]")
    with pytest.raises(ConfigError) as info:
        validate_config(text)
    msgs = [m for m in info.value.errors if "not strictly inside" in m]
    assert len(msgs) == 1 and msgs[0].startswith("scene.prisms[2]")


def test_errors_are_aggregated():
    text = (MINIMAL.replace("dt = 0.01", "dt = -1.0")
            .replace("n_walks = 100", "n_walks = 0\nprecision = \"half\"")
            .replace("[walker]", "[analysis]\nsmooth_window = 4\n\n[walker]"))
    with pytest.raises(ConfigError) as info:
        validate_config(text)
    fields = {m.split()[0] for m in info.value.errors}
    assert {"walker.dt", "estimator.n_walks", "estimator.precision", "analysis.smooth_window"} <= fields


@pytest.mark.parametrize("bad, field", [
    ("[walker]\ndt = 0.01\nbridgee = true", "walker.bridgee"),
    ("[walker]\ndt = \"fast\"", "walker.dt"),
    ("[walker]\ndt = 0.01\n[colour]\nx = 1", "colour"),
])
def test_unknown_and_mistyped_fields(bad, field):
    with pytest.raises(ConfigError) as info:
        validate_config(MINIMAL.replace("[walker]\ndt = 0.01", bad))
    assert any(m.startswith(field) for m in info.value.errors)


def test_layout_outside_ball():
    with pytest.raises(ConfigError, match="layout"):
        validate_config(MINIMAL.replace("count = 3", "count = 200"))


def test_acceleration_needs_vertical_rows():
    text = MINIMAL + "[analysis]\nacceleration = true\n"
    with pytest.raises(ConfigError, match="vertical"):
        validate_config(text)


def test_overrides_apply_before_validation():
    cfg = validate_config(MINIMAL, overrides={"walker.dt": 0.5, "walker.bridge": True, "estimator.seed": 9})
    assert cfg.walker.dt == 0.5 and cfg.walker.bridge_enabled and cfg.estimator.base_seed == 9
    assert cfg.echo["walker"]["dt"] == 0.5
    with pytest.raises(ConfigError):
        validate_config(MINIMAL, overrides={"estimator.n_walks": 0})


def test_invalid_toml():
    with pytest.raises(ConfigError, match="TOML"):
        validate_config("[scene\nradius_m = 1")


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_configs_validate(name):
    cfg = load_config(name)
    assert cfg.name == name
    assert cfg.scene.length_scale == 1000.0 and cfg.scene.domain.radius == 1e4
    assert cfg.scene.prisms[0].mass == 2e9
    assert "[scene]" in bundled_config_text(name)


def test_bundled_geometries():
    e1, e2, e3, e4 = (load_config(n) for n in BUNDLED)
    p1 = e1.layout.points()
    assert len(p1) == 31 and p1[0].tolist() == [-100, 50, 200] and p1[-1].tolist() == [200, 50, 200]
    assert (e1.walker.dt, e1.estimator.n_walks) == (0.1, 51200)
    p2 = e2.layout.points()
    assert p2[0].tolist() == [50, 50, -100] and p2[-1].tolist() == [50, 50, 200]
    assert (e2.walker.dt, e2.estimator.n_walks) == (0.01, 51200)
    assert e3.layout.shape == (11, 21) and e3.smooth_window == 5 and e3.estimator.n_walks == 65536
    assert e4.layout.vertical_spacing == 10.0 and e4.acceleration


def test_missing_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(str(tmp_path / "nope.cfg"))
