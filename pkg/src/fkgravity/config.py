"""Experiment configuration files.

Configs are TOML documents with the tables ``scene``, ``layout``,
``walker``, ``estimator``, ``analysis``, ``output`` and (optionally)
``sweep``.  :func:`validate_config` checks everything before a single walk
runs and collects every problem, addressed by its dotted field name.  The
fully defaulted configuration is kept as ``ExperimentConfig.echo`` and
written into every report.
"""

import copy
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import tomli

from .estimator import PRECISIONS, TRUNCATION_POLICIES, EstimatorConfig
from .scene import G_SI, BallDomain, Prism, Scene
from .survey import LayoutError, SurveyLayout
from .walker import _EXIT_RULES, WalkerParams, default_max_steps

BUNDLED = ("exp1", "exp2", "exp3", "exp4")


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


@dataclass
class ExperimentConfig:
    name: str
    scene: Scene
    layout: SurveyLayout
    walker: WalkerParams
    estimator: EstimatorConfig
    acceleration: bool
    smooth_window: int
    gz_rows: str
    output_dir: str
    output_format: str
    sweep_dt: list
    sweep_n_walks: list
    echo: dict = field(repr=False)


_SCHEMA = {
    "name": None,
    "scene": {"radius_m", "center_m", "length_scale_m", "background_density",
              "gravitational_constant", "prisms"},
    "layout": {"kind", "origin_m", "axis", "count", "spacing_m", "axes", "counts", "spacings_m"},
    "walker": {"dt", "bridge", "max_steps", "exit_rule"},
    "estimator": {"n_walks", "seed", "precision", "workers", "truncation_policy"},
    "analysis": {"acceleration", "smooth_window", "gz_rows"},
    "output": {"dir", "format"},
    "sweep": {"dt", "n_walks"},
}
_PRISM_KEYS = {"min_m", "max_m", "density"}


class _Collector:
    def __init__(self, raw):
        self.raw = raw
        self.errors = []

    def error(self, msg):
        self.errors.append(msg)

    def get(self, section, key, kind, default=None, required=False):
        table = self.raw.get(section, {})
        path = f"{section}.{key}"
        if key not in table:
            if required:
                self.error(f"{path} required")
            return default
        return self.check(path, table[key], kind)

    def check(self, path, value, kind):
        if kind == "float":
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                self.error(f"{path} must be a finite number, got {value!r}")
                return None
            return float(value)
        if kind == "int":
            if isinstance(value, bool) or not isinstance(value, int):
                self.error(f"{path} must be an integer, got {value!r}")
                return None
            return value
        if kind == "bool":
            if not isinstance(value, bool):
                self.error(f"{path} must be true or false, got {value!r}")
                return None
            return value
        if kind == "str":
            if not isinstance(value, str):
                self.error(f"{path} must be a string, got {value!r}")
                return None
            return value
        if kind == "vec3":
            if (not isinstance(value, list) or len(value) != 3
                    or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
                self.error(f"{path} must be a list of 3 numbers, got {value!r}")
                return None
            return [float(v) for v in value]
        raise AssertionError(kind)


def _check_keys(c, raw):
    for key, value in raw.items():
        if key not in _SCHEMA:
            c.error(f"{key}: unknown section")
            continue
        allowed = _SCHEMA[key]
        if allowed is None:
            continue
        if not isinstance(value, dict):
            c.error(f"{key} must be a table")
            continue
        for sub in value:
            if sub not in allowed:
                c.error(f"{key}.{sub}: unknown field")


def _parse_scene(c):
    radius = c.get("scene", "radius_m", "float", required=True)
    center = c.get("scene", "center_m", "vec3", [0.0, 0.0, 0.0])
    L = c.get("scene", "length_scale_m", "float", 1000.0)
    bg = c.get("scene", "background_density", "float", 0.0)
    G = c.get("scene", "gravitational_constant", "float", G_SI)
    raw_prisms = c.raw.get("scene", {}).get("prisms", [])
    if not isinstance(raw_prisms, list):
        c.error("scene.prisms must be an array of tables")
        raw_prisms = []
    if radius is not None and radius <= 0:
        c.error(f"scene.radius_m must be positive, got {radius}")
        radius = None
    if L is not None and L <= 0:
        c.error(f"scene.length_scale_m must be positive, got {L}")
        L = None
    prisms, echo_prisms = [], []
    for k, rp in enumerate(raw_prisms):
        path = f"scene.prisms[{k}]"
        if not isinstance(rp, dict):
            c.error(f"{path} must be a table")
            continue
        for sub in rp:
            if sub not in _PRISM_KEYS:
                c.error(f"{path}.{sub}: unknown field")
        missing = [key for key in ("min_m", "max_m", "density") if key not in rp]
        for key in missing:
            c.error(f"{path}.{key} required")
        if missing:
            continue
        lo = c.check(f"{path}.min_m", rp["min_m"], "vec3")
        hi = c.check(f"{path}.max_m", rp["max_m"], "vec3")
        rho = c.check(f"{path}.density", rp["density"], "float")
        if lo is None or hi is None or rho is None:
            continue
        try:
            prism = Prism(lo, hi, rho)
        except ValueError as exc:
            c.error(f"{path}: {exc}")
            continue
        if radius is not None and center is not None:
            dist = np.max(np.linalg.norm(prism.corners() - np.asarray(center), axis=1))
            if dist >= radius:
                c.error(f"{path}: corner at distance {dist:g} m is not strictly inside the ball (R={radius:g} m)")
                continue
        prisms.append(prism)
        echo_prisms.append({"min_m": lo, "max_m": hi, "density": rho})
    echo = {"radius_m": radius, "center_m": center, "length_scale_m": L,
            "background_density": bg, "gravitational_constant": G, "prisms": echo_prisms}
    if None in (radius, center, L, bg, G) or len(prisms) != len(raw_prisms):
        return None, echo
    return Scene(BallDomain(center, radius), prisms, bg, L, G), echo


def _parse_layout(c):
    kind = c.get("layout", "kind", "str", required=True)
    origin = c.get("layout", "origin_m", "vec3", required=True)
    echo = {"kind": kind, "origin_m": origin}
    if kind == "line":
        axis = c.get("layout", "axis", "vec3", required=True)
        count = c.get("layout", "count", "int", required=True)
        spacing = c.get("layout", "spacing_m", "float", required=True)
        echo.update(axis=axis, count=count, spacing_m=spacing)
        parts = (axis, count, spacing)
        build = lambda: SurveyLayout.line(origin, axis, count, spacing)  # noqa: E731
    elif kind == "grid":
        table = c.raw.get("layout", {})
        axes = table.get("axes")
        counts = table.get("counts")
        spacings = table.get("spacings_m")
        for key, val in (("axes", axes), ("counts", counts), ("spacings_m", spacings)):
            if val is None:
                c.error(f"layout.{key} required")
            elif not isinstance(val, list) or len(val) != 2:
                c.error(f"layout.{key} must be a list of 2 entries for a grid")
        if isinstance(axes, list) and len(axes) == 2:
            axes = [c.check(f"layout.axes[{k}]", a, "vec3") for k, a in enumerate(axes)]
        if isinstance(counts, list) and len(counts) == 2:
            counts = [c.check(f"layout.counts[{k}]", v, "int") for k, v in enumerate(counts)]
        if isinstance(spacings, list) and len(spacings) == 2:
            spacings = [c.check(f"layout.spacings_m[{k}]", v, "float") for k, v in enumerate(spacings)]
        echo.update(axes=axes, counts=counts, spacings_m=spacings)
        parts = (axes, counts, spacings)
        if all(isinstance(p, list) and len(p) == 2 and None not in p for p in parts):
            build = lambda: SurveyLayout.grid(origin, axes, counts, spacings)  # noqa: E731
        else:
            parts = (None,)
    else:
        if kind is not None:
            c.error(f"layout.kind must be 'line' or 'grid', got {kind!r}")
        return None, echo
    if origin is None or None in parts:
        return None, echo
    try:
        return build(), echo
    except LayoutError as exc:
        c.error(f"layout: {exc}")
        return None, echo


def _choice(c, section, key, choices, default):
    value = c.get(section, key, "str", default)
    if value is not None and value not in choices:
        c.error(f"{section}.{key} must be one of {list(choices)}, got {value!r}")
        return None
    return value


def _number_list(c, key, kind):
    values = c.raw.get("sweep", {}).get(key)
    if values is None:
        return None
    if not isinstance(values, list) or not values:
        c.error(f"sweep.{key} must be a non-empty list")
        return None
    out = [c.check(f"sweep.{key}[{k}]", v, kind) for k, v in enumerate(values)]
    if None in out:
        return None
    if any(v <= 0 for v in out):
        c.error(f"sweep.{key} entries must be positive")
        return None
    return out


def parse_config(raw, name="experiment"):
    """Validate a config mapping; returns :class:`ExperimentConfig` or raises :class:`ConfigError`."""
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a table"])
    c = _Collector(raw)
    _check_keys(c, raw)
    name = raw.get("name", name)
    if not isinstance(name, str) or not name:
        c.error("name must be a non-empty string")
        name = "experiment"

    scene, scene_echo = _parse_scene(c)
    layout, layout_echo = _parse_layout(c)

    dt = c.get("walker", "dt", "float", required=True)
    if dt is not None and dt <= 0:
        c.error(f"walker.dt must be positive, got {dt}")
        dt = None
    bridge = c.get("walker", "bridge", "bool", False)
    max_steps = c.get("walker", "max_steps", "int", None)
    if max_steps is not None and max_steps < 1:
        c.error(f"walker.max_steps must be >= 1, got {max_steps}")
        max_steps = None
    exit_rule = _choice(c, "walker", "exit_rule", tuple(_EXIT_RULES), "full")

    n_walks = c.get("estimator", "n_walks", "int", required=True)
    if n_walks is not None and n_walks < 1:
        c.error(f"estimator.n_walks must be >= 1, got {n_walks}")
        n_walks = None
    seed = c.get("estimator", "seed", "int", 0)
    if seed is not None and not 0 <= seed < 2**64:
        c.error(f"estimator.seed must be an unsigned 64-bit integer, got {seed}")
        seed = None
    precision = _choice(c, "estimator", "precision", PRECISIONS, "double")
    workers = c.get("estimator", "workers", "int", 1)
    if workers is not None and workers < 1:
        c.error(f"estimator.workers must be >= 1, got {workers}")
        workers = None
    policy = _choice(c, "estimator", "truncation_policy", TRUNCATION_POLICIES, "drop_and_report")

    acceleration = c.get("analysis", "acceleration", "bool", False)
    window = c.get("analysis", "smooth_window", "int", 5)
    if window is not None and (window < 1 or window % 2 == 0):
        c.error(f"analysis.smooth_window must be an odd positive integer, got {window}")
        window = None
    gz_rows = _choice(c, "analysis", "gz_rows", ("all", "center"), "all")

    out_dir = c.get("output", "dir", "str", f"results/{name}")
    out_format = _choice(c, "output", "format", ("csv", "json"), "csv")

    sweep_dt = _number_list(c, "dt", "float")
    sweep_n = _number_list(c, "n_walks", "int")

    if scene is not None and layout is not None:
        try:
            layout.check_inside(scene.domain)
        except LayoutError as exc:
            c.error(f"layout: {exc}")
    if layout is not None and acceleration:
        if not layout.is_vertical:
            c.error("analysis.acceleration needs a layout whose last axis is vertical [0, 0, 1]")
        elif layout.shape[0] < 3:
            c.error("analysis.acceleration needs at least 3 vertical rows")
        elif window is not None and window > layout.shape[0]:
            c.error(f"analysis.smooth_window {window} exceeds the {layout.shape[0]} vertical rows")

    if c.errors:
        raise ConfigError(c.errors)

    walker = WalkerParams(dt, bridge, max_steps, exit_rule)
    resolved_steps = walker.resolve_max_steps(scene.domain.radius / scene.length_scale)
    echo = {
        "name": name,
        "scene": scene_echo,
        "layout": layout_echo,
        "walker": {"dt": dt, "bridge": bridge, "max_steps": resolved_steps, "exit_rule": exit_rule},
        "estimator": {"n_walks": n_walks, "seed": seed, "precision": precision,
                      "workers": workers, "truncation_policy": policy},
        "analysis": {"acceleration": acceleration, "smooth_window": window, "gz_rows": gz_rows},
        "output": {"dir": out_dir, "format": out_format},
        "sweep": {"dt": sweep_dt or [dt], "n_walks": sweep_n or [n_walks]},
    }
    return ExperimentConfig(
        name=name,
        scene=scene,
        layout=layout,
        walker=walker,
        estimator=EstimatorConfig(n_walks, seed, workers, precision, policy),
        acceleration=acceleration,
        smooth_window=window,
        gz_rows=gz_rows,
        output_dir=out_dir,
        output_format=out_format,
        sweep_dt=sweep_dt or [dt],
        sweep_n_walks=sweep_n or [n_walks],
        echo=echo,
    )


def validate_config(text, name="experiment", overrides=None):
    """Parse TOML text, apply ``overrides`` (``{"walker.dt": 0.01, ...}``) and validate."""
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError([f"not valid TOML: {exc}"]) from None
    if overrides:
        raw = apply_overrides(raw, overrides)
    return parse_config(raw, name)


def apply_overrides(raw, overrides):
    raw = copy.deepcopy(raw)
    for dotted, value in overrides.items():
        section, key = dotted.split(".")
        raw.setdefault(section, {})[key] = value
    return raw


def bundled_config_text(name):
    """Text of a bundled experiment config (``exp1`` .. ``exp4``)."""
    if name not in BUNDLED:
        raise KeyError(f"no bundled config named {name!r}; choose from {BUNDLED}")
    return resources.files("fkgravity.configs").joinpath(f"{name}.cfg").read_text()


def load_config(path_or_name, overrides=None):
    """Load a config file, or a bundled config by name."""
    import os

    if path_or_name in BUNDLED and not os.path.exists(path_or_name):
        return validate_config(bundled_config_text(path_or_name), path_or_name, overrides)
    try:
        with open(path_or_name, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([f"cannot read config {path_or_name!r}: {exc.strerror}"]) from None
    stem = os.path.splitext(os.path.basename(path_or_name))[0]
    return validate_config(text, stem, overrides)


__all__ = [
    "BUNDLED",
    "ConfigError",
    "ExperimentConfig",
    "bundled_config_text",
    "default_max_steps",
    "load_config",
    "parse_config",
    "validate_config",
]
