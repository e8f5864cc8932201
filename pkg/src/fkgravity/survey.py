"""Evaluation layouts, finite-difference acceleration, smoothing and error metrics."""

from dataclasses import dataclass

import numpy as np

from .scene import contains

_VERTICAL = np.array([0.0, 0.0, 1.0])


class LayoutError(ValueError):
    pass


def _unit(v, name):
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (3,):
        raise LayoutError(f"{name} must be a 3-vector")
    norm = np.linalg.norm(v)
    if not norm > 0:
        raise LayoutError(f"{name} must be non-zero")
    return v / norm


@dataclass(frozen=True, eq=False)
class SurveyLayout:
    """A line or a two-axis grid of evaluation points (meters).

    Points are generated with the first axis varying fastest, so a grid
    reshapes to ``(counts[1], counts[0])``: one row per step along the
    second axis.  For acceleration the last axis must be vertical.
    """

    kind: str
    origin: np.ndarray
    axes: tuple
    counts: tuple
    spacings: tuple

    def __post_init__(self):
        if self.kind not in ("line", "grid"):
            raise LayoutError(f"kind must be 'line' or 'grid', got {self.kind!r}")
        n_axes = 1 if self.kind == "line" else 2
        if not (len(self.axes) == len(self.counts) == len(self.spacings) == n_axes):
            raise LayoutError(f"a {self.kind} layout needs exactly {n_axes} axis/count/spacing entries")
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.float64))
        object.__setattr__(
            self, "axes", tuple(_unit(a, f"axes[{k}]") for k, a in enumerate(self.axes))
        )
        counts = tuple(int(c) for c in self.counts)
        if any(c < 1 for c in counts):
            raise LayoutError("counts must be >= 1")
        spacings = tuple(float(s) for s in self.spacings)
        if any(not s > 0 for s in spacings):
            raise LayoutError("spacings must be positive")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "spacings", spacings)

    @classmethod
    def line(cls, origin, axis, count, spacing):
        return cls("line", origin, (axis,), (count,), (spacing,))

    @classmethod
    def grid(cls, origin, axes, counts, spacings):
        return cls("grid", origin, tuple(axes), tuple(counts), tuple(spacings))

    @property
    def shape(self):
        """``(rows, columns)``; rows step along the last axis."""
        if self.kind == "line":
            return (self.counts[0], 1)
        return (self.counts[1], self.counts[0])

    @property
    def is_vertical(self):
        return bool(np.allclose(self.axes[-1], _VERTICAL))

    @property
    def vertical_spacing(self):
        if not self.is_vertical:
            raise LayoutError("layout has no vertical axis")
        return self.spacings[-1]

    def points(self):
        if self.kind == "line":
            k = np.arange(self.counts[0])[:, None]
            return self.origin + k * self.spacings[0] * self.axes[0]
        i0, i1 = np.meshgrid(np.arange(self.counts[0]), np.arange(self.counts[1]))
        return (
            self.origin
            + i0.reshape(-1, 1) * self.spacings[0] * self.axes[0]
            + i1.reshape(-1, 1) * self.spacings[1] * self.axes[1]
        )

    def check_inside(self, domain):
        for k, p in enumerate(self.points()):
            if not contains(domain, p):
                raise LayoutError(f"layout point {k} at {tuple(p)} is outside the domain")


@dataclass(eq=False)
class FieldSeries:
    """Values (and standard errors) attached to an ordered list of points.

    ``shape`` is ``(rows, columns)`` for values laid out on a layout with a
    vertical last axis; ``None`` for a plain series.
    """

    points: np.ndarray
    values: np.ndarray
    standard_errors: np.ndarray = None
    shape: tuple = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        self.values = np.asarray(self.values, dtype=np.float64).ravel()
        if self.standard_errors is None:
            self.standard_errors = np.zeros_like(self.values)
        self.standard_errors = np.asarray(self.standard_errors, dtype=np.float64).ravel()
        n = len(self.values)
        if len(self.points) != n or len(self.standard_errors) != n:
            raise ValueError(
                f"length mismatch: {len(self.points)} points, {n} values, "
                f"{len(self.standard_errors)} standard errors"
            )
        if self.shape is not None:
            self.shape = tuple(int(s) for s in self.shape)
            if self.shape[0] * self.shape[1] != n:
                raise ValueError(f"shape {self.shape} does not match {n} values")

    def __len__(self):
        return len(self.values)

    @classmethod
    def from_estimates(cls, estimates, shape=None):
        return cls(
            np.array([e.point for e in estimates]),
            np.array([e.mean for e in estimates]),
            np.array([e.standard_error for e in estimates]),
            shape,
        )


def moving_average_weights(n, window):
    """Row-stochastic ``(n, n)`` matrix of the centered moving mean with shrinking ends."""
    window = int(window)
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be an odd positive integer, got {window}")
    if window > n:
        raise ValueError(f"window {window} exceeds series length {n}")
    half = window // 2
    W = np.zeros((n, n))
    for i in range(n):
        h = min(half, i, n - 1 - i)
        W[i, i - h:i + h + 1] = 1.0 / (2 * h + 1)
    return W


def moving_average(series, window):
    """Centered moving mean; near the ends the window shrinks symmetrically.

    The output has the length of the input and ``window=1`` returns the
    series unchanged.  Each mean is formed as the centre value plus the
    mean deviation from it, so constant series come back bit-for-bit.

    >>> moving_average([1.0, 2.0, 4.0, 8.0, 16.0], 3)
    array([ 1.        ,  2.33333333,  4.66666667,  9.33333333, 16.        ])
    """
    x = np.asarray(series, dtype=np.float64)
    n = len(x)
    window = int(window)
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be an odd positive integer, got {window}")
    if window > n:
        raise ValueError(f"window {window} exceeds series length {n}")
    half = window // 2
    out = x.copy()
    for i in range(n):
        h = min(half, i, n - 1 - i)
        if h:
            out[i] = x[i] + np.sum(x[i - h:i + h + 1] - x[i]) / (2 * h + 1)
    return out


def _grid_values(series):
    if series.shape is None:
        return series.values.reshape(-1, 1), series.points.reshape(-1, 1, 3)
    rows, cols = series.shape
    return series.values.reshape(rows, cols), series.points.reshape(rows, cols, 3)


def _difference_matrix(rows):
    D = np.zeros((rows - 2, rows))
    for i in range(rows - 2):
        D[i, i] = -1.0
        D[i, i + 2] = 1.0
    return D


def vertical_acceleration(potential, dz, smooth_window=1):
    """Centered difference ``(u(z + dz) - u(z - dz)) / (2 dz)`` on interior rows.

    Parameters
    ----------
    potential : FieldSeries
        Values on a layout whose rows step vertically by ``dz``; a series
        without ``shape`` is treated as a single vertical column.
    dz : float
        Vertical spacing in meters.
    smooth_window : int, optional
        Moving-average window applied to each column of the potential
        before differencing.

    Returns
    -------
    FieldSeries
        ``g_z`` in m/s^2 at rows ``1 .. rows-2``, with propagated standard
        errors, shape ``(rows - 2, columns)``.
    """
    if not dz > 0:
        raise ValueError(f"dz must be positive, got {dz!r}")
    U, P = _grid_values(potential)
    rows, cols = U.shape
    if rows < 3:
        raise LayoutError(f"need at least 3 vertical rows for a centered difference, got {rows}")
    S = potential.standard_errors.reshape(rows, cols)
    if smooth_window > 1:
        U = np.column_stack([moving_average(U[:, c], smooth_window) for c in range(cols)])
    G = (U[2:] - U[:-2]) / (2.0 * dz)
    M = _difference_matrix(rows) / (2.0 * dz)
    if smooth_window > 1:
        M = M @ moving_average_weights(rows, smooth_window)
    G_se = np.sqrt((M * M) @ (S * S))
    return FieldSeries(P[1:-1].reshape(-1, 3), G.ravel(), G_se.ravel(), (rows - 2, cols))


def _check_pair(estimate, truth):
    if len(estimate) != len(truth):
        raise ValueError(f"length mismatch: {len(estimate)} estimates vs {len(truth)} truth values")


def _values(s):
    return s.values if isinstance(s, FieldSeries) else np.asarray(s, dtype=np.float64).ravel()


def rms_relative_error(estimate, truth):
    """RMS of ``(estimate - truth) / max|truth|``."""
    e, t = _values(estimate), _values(truth)
    _check_pair(e, t)
    scale = np.max(np.abs(t))
    if scale == 0:
        raise ValueError("truth series is identically zero")
    return float(np.sqrt(np.mean(((e - t) / scale) ** 2)))


def mean_offset(estimate, truth):
    """Mean signed deviation ``estimate - truth``."""
    e, t = _values(estimate), _values(truth)
    _check_pair(e, t)
    return float(np.mean(e - t))
