"""scikit-learn style wrappers.

The solver, smoother and finite-difference operator behave like regular
estimators and transformers: hyper-parameters live in ``__init__``,
``get_params``/``set_params``/``clone`` work, and inputs go through
:func:`check_points` / :func:`check_series`.  ``X`` is always an array of
evaluation points of shape ``(n, 3)`` in meters.

>>> from fkgravity import BallDomain, Prism, Scene
>>> scene = Scene(BallDomain([0, 0, 0], 1e4), [Prism([0, 0, 0], [100, 100, 100], 2000.0)], length_scale=1e3)
>>> PrismOracle(scene).fit().predict([[50.0, 50.0, 200.0]])
array([0.00088745])
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from .estimator import EstimatorConfig, estimate_many
from .oracle import scene_gz, scene_potential
from .scene import Scene, contains
from .survey import FieldSeries, moving_average, vertical_acceleration
from .walker import WalkerParams


def check_points(X, domain=None):
    """Validate evaluation points: finite floats of shape ``(n, 3)``, optionally inside ``domain``."""
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if X.shape[1] != 3:
        raise ValueError(f"expected points of shape (n, 3), got {X.shape}")
    if domain is not None:
        for k, p in enumerate(X):
            if not contains(domain, p):
                raise ValueError(f"point {k} at {tuple(p)} is not strictly inside the domain")
    return X


def check_series(X):
    """Validate a series (1-D) or a stack of columns (2-D, one series per column)."""
    X = np.asarray(X)
    if X.ndim == 1:
        return check_array(X.reshape(-1, 1), dtype=np.float64)[:, 0]
    return check_array(X, dtype=np.float64)


def _check_scene(scene):
    if not isinstance(scene, Scene):
        raise TypeError(f"scene must be a Scene, got {type(scene).__name__}")
    return scene


class FeynmanKacPotential(BaseEstimator):
    """Monte Carlo gravitational potential at arbitrary points.

    Parameters
    ----------
    scene : Scene
    dt : float
        Time step in internal units.
    n_walks : int
    seed : int
    bridge : bool
        Enable the Brownian-bridge exit test.
    max_steps : int or None
        ``None`` picks a budget from the expected exit time.
    precision : {"double", "single"}
    workers : int
    truncation_policy : {"error", "drop_and_report"}
    """

    def __init__(self, scene=None, dt=0.1, n_walks=1024, seed=0, bridge=False, max_steps=None,
                 precision="double", workers=1, truncation_policy="error"):
        self.scene = scene
        self.dt = dt
        self.n_walks = n_walks
        self.seed = seed
        self.bridge = bridge
        self.max_steps = max_steps
        self.precision = precision
        self.workers = workers
        self.truncation_policy = truncation_policy

    def fit(self, X=None, y=None):
        """Validate the hyper-parameters; no data is needed (forward model)."""
        _check_scene(self.scene)
        self.walker_ = WalkerParams(self.dt, self.bridge, self.max_steps)
        self.config_ = EstimatorConfig(self.n_walks, self.seed, self.workers, self.precision,
                                       self.truncation_policy)
        self.walker_.resolve_max_steps(self.scene.domain.radius / self.scene.length_scale)
        if X is not None:
            check_points(X, self.scene.domain)
        return self

    def estimate(self, X):
        """Full :class:`PointEstimate` records for every point."""
        check_is_fitted(self, "config_")
        X = check_points(X, self.scene.domain)
        return estimate_many(self.scene, X, self.walker_, self.config_)

    def predict(self, X):
        """Potential (m^2/s^2) at each point."""
        return np.array([e.mean for e in self.estimate(X)])

    def predict_with_se(self, X):
        """Potential and its standard error at each point."""
        est = self.estimate(X)
        return np.array([e.mean for e in est]), np.array([e.standard_error for e in est])


class PrismOracle(BaseEstimator):
    """Closed-form potential (and ``g_z``) of the scene's prisms in free space."""

    def __init__(self, scene=None):
        self.scene = scene

    def fit(self, X=None, y=None):
        _check_scene(self.scene)
        self.n_prisms_ = len(self.scene.prisms)
        return self

    def predict(self, X):
        check_is_fitted(self, "n_prisms_")
        return np.atleast_1d(scene_potential(self.scene, check_points(X)))

    def predict_gz(self, X, dz=1e-2):
        check_is_fitted(self, "n_prisms_")
        return np.atleast_1d(scene_gz(self.scene, check_points(X), dz))


class MovingAverageSmoother(TransformerMixin, BaseEstimator):
    """Centered moving mean of each column (window shrinks at the ends)."""

    def __init__(self, window=5):
        self.window = window

    def fit(self, X, y=None):
        X = check_series(X)
        if self.window < 1 or self.window % 2 == 0:
            raise ValueError(f"window must be an odd positive integer, got {self.window}")
        self.n_samples_ = X.shape[0]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_samples_")
        X = check_series(X)
        if X.ndim == 1:
            return moving_average(X, self.window)
        return np.column_stack([moving_average(X[:, c], self.window) for c in range(X.shape[1])])


class VerticalGradient(TransformerMixin, BaseEstimator):
    """Centered vertical difference of potential columns, optionally smoothed first.

    ``transform`` maps an array of shape ``(rows, columns)`` (rows stepping
    up by ``dz`` meters) to ``g_z`` of shape ``(rows - 2, columns)``.
    """

    def __init__(self, dz=1.0, smooth_window=1):
        self.dz = dz
        self.smooth_window = smooth_window

    def fit(self, X, y=None):
        X = check_series(X)
        if not self.dz > 0:
            raise ValueError(f"dz must be positive, got {self.dz}")
        self.n_rows_ = X.shape[0]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_rows_")
        X = check_series(X)
        one_d = X.ndim == 1
        U = X.reshape(-1, 1) if one_d else X
        rows, cols = U.shape
        series = FieldSeries(np.zeros((rows * cols, 3)), U.ravel(), shape=(rows, cols))
        g = vertical_acceleration(series, self.dz, self.smooth_window).values.reshape(rows - 2, cols)
        return g[:, 0] if one_d else g


__all__ = [
    "FeynmanKacPotential",
    "MovingAverageSmoother",
    "PrismOracle",
    "VerticalGradient",
    "check_points",
    "check_series",
]
