"""Experiment runner: estimates over a layout, metrics against the oracle, reports.

A run writes three files into the output directory:

``points.csv`` (or ``points.json``)
    One row per evaluation point with the columns of :data:`COLUMNS`.
``report.json``
    Summary metrics and the fully defaulted config echo.
``run_meta.json``
    Wall-clock timings, worker count, output directory and environment.
    Kept apart so the two files above are byte-identical for any worker
    count and destination.
"""

import csv
import io
import json
import logging
import math
import os
import platform
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .estimator import estimate_many
from .oracle import boundary_error_estimate, scene_gz, scene_potential
from .survey import FieldSeries, mean_offset, rms_relative_error, vertical_acceleration

log = logging.getLogger(__name__)

COLUMNS = (
    "x_m", "y_m", "z_m",
    "u_num_SI", "u_se_SI", "u_truth_SI",
    "gz_num_SI", "gz_smooth_SI", "gz_truth_SI",
)
UNITS = {
    "x_m": "m", "y_m": "m", "z_m": "m",
    "u_num_SI": "m^2/s^2", "u_se_SI": "m^2/s^2", "u_truth_SI": "m^2/s^2",
    "gz_num_SI": "m/s^2", "gz_smooth_SI": "m/s^2", "gz_truth_SI": "m/s^2",
}


def _num(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


@dataclass
class ExperimentReport:
    """Result of :func:`run_experiment`.

    ``rows`` holds one dict per point keyed by :data:`COLUMNS`; ``None``
    marks a value that does not apply.  ``timing`` and ``environment`` go to
    ``run_meta.json`` only.
    """

    name: str
    rows: list
    summary: dict
    config: dict
    timing: dict = field(default_factory=dict)
    environment: dict = field(default_factory=dict)

    def points_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in self.rows:
            writer.writerow(["" if row[c] is None else repr(row[c]) for c in COLUMNS])
        return buf.getvalue()

    def points_json(self):
        return json.dumps({"units": UNITS, "rows": self.rows}, indent=1) + "\n"

    def report_json(self):
        doc = {"name": self.name, "version": __version__, "summary": self.summary, "config": self.config}
        return json.dumps(doc, indent=2) + "\n"

    def meta_json(self):
        return json.dumps({"timing": self.timing, "environment": self.environment}, indent=2) + "\n"

    def write(self, out_dir, fmt="csv"):
        """Write the report files; returns their paths."""
        try:
            os.makedirs(out_dir, exist_ok=True)
            points = os.path.join(out_dir, f"points.{fmt}")
            files = {
                points: self.points_csv() if fmt == "csv" else self.points_json(),
                os.path.join(out_dir, "report.json"): self.report_json(),
                os.path.join(out_dir, "run_meta.json"): self.meta_json(),
            }
            for path, text in files.items():
                with open(path, "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write report to {exc.filename or out_dir}: {exc.strerror}") from exc
        return list(files)


def read_points_csv(path):
    """Parse a ``points.csv`` back into a dict of float arrays (blank -> nan)."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [[float(v) if v else math.nan for v in row] for row in reader]
    arr = np.array(data, dtype=np.float64).reshape(-1, len(header))
    return {name: arr[:, k] for k, name in enumerate(header)}


def environment():
    import numba
    import scipy

    return {
        "python": platform.python_version(),
        "platform": platform.platform(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "cpu_count": os.cpu_count(),
    }


def _metric_rows(n_rows, gz_rows):
    if gz_rows == "center":
        return [(n_rows - 1) // 2]
    return list(range(n_rows))


def acceleration_fields(config, potential):
    """Unsmoothed, smoothed and true ``g_z`` for an estimated potential field."""
    layout = config.layout
    dz = layout.vertical_spacing
    rows, cols = layout.shape
    series = FieldSeries(potential.points, potential.values, potential.standard_errors, (rows, cols))
    raw = vertical_acceleration(series, dz)
    smooth = vertical_acceleration(series, dz, config.smooth_window)
    # truth is the same centered difference taken on the closed-form potential
    truth = scene_gz(config.scene, raw.points, dz)
    return raw, smooth, truth


def acceleration_metrics(config, raw, smooth, truth):
    rows = raw.shape[0]
    keep = np.zeros(raw.shape, dtype=bool)
    keep[_metric_rows(rows, config.gz_rows)] = True
    keep = keep.ravel()
    rms_raw = rms_relative_error(raw.values[keep], truth[keep])
    rms_smooth = rms_relative_error(smooth.values[keep], truth[keep])
    return {
        "gz_metric_rows": config.gz_rows,
        "rms_gz_rel": rms_raw,
        "rms_gz_smooth_rel": rms_smooth,
        "smoothing_ratio": rms_smooth / rms_raw if rms_raw > 0 else None,
        "max_gz_se_SI": float(np.max(raw.standard_errors)),
        "max_gz_smooth_se_SI": float(np.max(smooth.standard_errors)),
    }


def run_experiment(config, oracle_only=False, write=True, progress=None):
    """Run one experiment and (optionally) write its report.

    Parameters
    ----------
    config : ExperimentConfig
    oracle_only : bool
        Skip the Monte Carlo part and emit truth columns only.
    write : bool
        Write report files into ``config.output_dir``.
    progress : callable, optional
        Forwarded to :func:`estimate_many`.

    Returns
    -------
    ExperimentReport
    """
    t_start = time.perf_counter()
    points = config.layout.points()
    truth_u = np.atleast_1d(scene_potential(config.scene, points))
    if len(truth_u) != len(points):
        raise RuntimeError(f"oracle returned {len(truth_u)} values for {len(points)} points")
    n = len(points)
    rows = [
        {c: None for c in COLUMNS} | {"x_m": float(p[0]), "y_m": float(p[1]), "z_m": float(p[2]),
                                      "u_truth_SI": float(t)}
        for p, t in zip(points, truth_u)
    ]
    summary = {
        "n_points": n,
        "boundary_offset_estimate_SI": boundary_error_estimate(config.scene),
    }
    timing = {}
    if config.acceleration:
        _, cols = config.layout.shape
        dz = config.layout.vertical_spacing
        interior = np.arange(cols, n - cols)
        gz_true = scene_gz(config.scene, points[interior], dz)
        for k, g in zip(interior, np.atleast_1d(gz_true)):
            rows[k]["gz_truth_SI"] = float(g)
        summary["gz_spacing_m"] = dz

    if not oracle_only:
        estimates = estimate_many(config.scene, points, config.walker, config.estimator, progress=progress)
        t_mc = time.perf_counter()
        potential = FieldSeries.from_estimates(estimates)
        for row, est in zip(rows, estimates):
            row["u_num_SI"] = _num(est.mean)
            row["u_se_SI"] = _num(est.standard_error)
        offset = mean_offset(potential, truth_u)
        summary.update(
            rms_u_rel=rms_relative_error(potential, truth_u),
            mean_offset_u_SI=offset,
            offset_ratio=abs(offset) / summary["boundary_offset_estimate_SI"]
            if summary["boundary_offset_estimate_SI"] > 0 else None,
            max_u_se_SI=float(np.max(potential.standard_errors)),
            mean_exit_time=float(np.mean([e.mean_exit_time for e in estimates])),
            n_truncated=int(sum(e.n_truncated for e in estimates)),
        )
        if config.acceleration:
            raw, smooth, truth = acceleration_fields(config, potential)
            _, cols = config.layout.shape
            for k, (g, s) in enumerate(zip(raw.values, smooth.values)):
                rows[cols + k]["gz_num_SI"] = _num(g)
                rows[cols + k]["gz_smooth_SI"] = _num(s)
            summary.update(acceleration_metrics(config, raw, smooth, truth))
        timing["monte_carlo_s"] = t_mc - t_start
        timing["per_point_s"] = [e.wall_time for e in estimates]

    timing["total_s"] = time.perf_counter() - t_start
    echo = json.loads(json.dumps(config.echo))
    # execution-only settings never change a number; they stay out of the deterministic report
    timing["workers"] = echo["estimator"].pop("workers")
    timing["output_dir"] = echo["output"].pop("dir")
    timing["oracle_only"] = bool(oracle_only)
    report = ExperimentReport(config.name, rows, summary, echo, timing, environment())
    if write:
        for path in report.write(config.output_dir, config.output_format):
            log.info("wrote %s", path)
    return report


@dataclass
class SweepTable:
    """Wall time and RMS error for every (dt, N) cell; rows follow ``dts``."""

    dts: list
    n_walks: list
    wall_time: np.ndarray
    rms: np.ndarray
    mean_steps: np.ndarray

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["dt_internal", "n_walks", "wall_time_s", "rms_u_rel", "mean_steps"])
        for i, dt in enumerate(self.dts):
            for j, n in enumerate(self.n_walks):
                writer.writerow([repr(dt), n, repr(float(self.wall_time[i, j])),
                                 repr(float(self.rms[i, j])), repr(float(self.mean_steps[i, j]))])
        return buf.getvalue()

    def _grid(self, title, values, fmt):
        head = ["dt \\ N"] + [str(n) for n in self.n_walks]
        body = [[repr(dt)] + [fmt.format(v) for v in values[i]] for i, dt in enumerate(self.dts)]
        widths = [max(len(r[k]) for r in [head] + body) for k in range(len(head))]
        lines = [title]
        for r in [head] + body:
            lines.append("  ".join(cell.rjust(w) for cell, w in zip(r, widths)))
        return "\n".join(lines)

    def to_text(self):
        return (
            self._grid("wall time (s)", self.wall_time, "{:.2f}")
            + "\n\n"
            + self._grid("RMS potential error (relative to max)", self.rms, "{:.4f}")
            + "\n"
        )


def run_sweep(config, write=True):
    """Run every (dt, N) combination of the sweep lists on the config's layout."""
    points = config.layout.points()
    truth = np.atleast_1d(scene_potential(config.scene, points))
    dts, ns = list(config.sweep_dt), list(config.sweep_n_walks)
    wall = np.zeros((len(dts), len(ns)))
    rms = np.zeros_like(wall)
    steps = np.zeros_like(wall)
    for i, dt in enumerate(dts):
        walker = replace(config.walker, dt=float(dt))
        for j, n in enumerate(ns):
            cfg = replace(config.estimator, n_walks=int(n))
            t0 = time.perf_counter()
            est = estimate_many(config.scene, points, walker, cfg)
            wall[i, j] = time.perf_counter() - t0
            rms[i, j] = rms_relative_error(FieldSeries.from_estimates(est), truth)
            steps[i, j] = np.mean([e.mean_exit_time for e in est]) / dt
            log.info("dt=%g N=%d: %.2f s, rms %.4f", dt, n, wall[i, j], rms[i, j])
    table = SweepTable(dts, ns, wall, rms, steps)
    if write:
        try:
            os.makedirs(config.output_dir, exist_ok=True)
            for fname, text in (("sweep.csv", table.to_csv()), ("sweep.txt", table.to_text())):
                path = os.path.join(config.output_dir, fname)
                with open(path, "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
                log.info("wrote %s", path)
        except OSError as exc:
            raise OSError(f"cannot write sweep to {exc.filename or config.output_dir}: {exc.strerror}") from exc
    return table


__all__ = [
    "COLUMNS",
    "ExperimentReport",
    "SweepTable",
    "read_points_csv",
    "run_experiment",
    "run_sweep",
]
