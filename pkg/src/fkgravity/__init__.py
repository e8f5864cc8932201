"""Feynman-Kac Monte Carlo solver for the gravitational potential of prism models.

The potential ``u`` with ``-laplace(u) = 4 pi G rho`` and ``u = 0`` on a
large sphere is estimated at individual points as the mean of path
integrals of the source along discretized diffusion paths.
"""

__version__ = "0.1.0"

from .config import ConfigError, ExperimentConfig, load_config, validate_config
from .estimator import (
    EstimatorConfig,
    PointEstimate,
    TruncatedWalkError,
    convergence_probe,
    estimate_many,
    estimate_potential,
)
from .estimators import (
    FeynmanKacPotential,
    MovingAverageSmoother,
    PrismOracle,
    VerticalGradient,
    check_points,
)
from .experiments import ExperimentReport, SweepTable, run_experiment, run_sweep
from .oracle import (
    boundary_error_estimate,
    mean_exit_time,
    prism_gz,
    prism_potential,
    prism_potential_quad,
    scene_gz,
    scene_potential,
)
from .rng import RandomStream
from .scene import BallDomain, Prism, Scene, contains, density_at, source_term, total_anomalous_mass
from .survey import (
    FieldSeries,
    SurveyLayout,
    mean_offset,
    moving_average,
    rms_relative_error,
    vertical_acceleration,
)
from .walker import WalkerParams, WalkResult, bridge_exit_probability, run_walk, step

__all__ = [
    "BallDomain",
    "ConfigError",
    "EstimatorConfig",
    "ExperimentConfig",
    "ExperimentReport",
    "FeynmanKacPotential",
    "FieldSeries",
    "MovingAverageSmoother",
    "PointEstimate",
    "Prism",
    "PrismOracle",
    "RandomStream",
    "Scene",
    "SurveyLayout",
    "SweepTable",
    "TruncatedWalkError",
    "VerticalGradient",
    "WalkResult",
    "WalkerParams",
    "boundary_error_estimate",
    "bridge_exit_probability",
    "check_points",
    "contains",
    "convergence_probe",
    "density_at",
    "estimate_many",
    "estimate_potential",
    "load_config",
    "mean_exit_time",
    "mean_offset",
    "moving_average",
    "prism_gz",
    "prism_potential",
    "prism_potential_quad",
    "rms_relative_error",
    "run_experiment",
    "run_sweep",
    "run_walk",
    "scene_gz",
    "scene_potential",
    "source_term",
    "step",
    "total_anomalous_mass",
    "validate_config",
    "vertical_acceleration",
]
