"""Monte Carlo averaging of walk integrals at evaluation points.

Walker ``i`` of point ``j`` draws its random numbers from the stream keyed
by ``(base_seed, point_offset + j, i)``, so estimates at different points
are independent and every estimate is a pure function of its inputs.
Workers fill disjoint slices of a per-walk array; the mean and variance
are then formed by a fixed pairwise reduction in walker order, which makes
the result independent of how walks were partitioned.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .scene import contains
from .walker import KernelInputs

PRECISIONS = ("single", "double")
TRUNCATION_POLICIES = ("error", "drop_and_report")


class TruncatedWalkError(RuntimeError):
    """Raised when walks hit ``max_steps`` under the ``error`` policy."""


@dataclass(frozen=True)
class EstimatorConfig:
    n_walks: int
    base_seed: int = 0
    workers: int = 1
    precision: str = "double"
    truncation_policy: str = "error"

    def __post_init__(self):
        if int(self.n_walks) < 1:
            raise ValueError(f"n_walks must be >= 1, got {self.n_walks!r}")
        if int(self.workers) < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers!r}")
        if self.precision not in PRECISIONS:
            raise ValueError(f"precision must be one of {PRECISIONS}, got {self.precision!r}")
        if self.truncation_policy not in TRUNCATION_POLICIES:
            raise ValueError(
                f"truncation_policy must be one of {TRUNCATION_POLICIES}, got {self.truncation_policy!r}"
            )


@dataclass
class PointEstimate:
    point: np.ndarray
    mean: float
    sample_variance: float
    standard_error: float
    n_effective: int
    mean_exit_time: float
    wall_time: float = field(default=0.0, compare=False)
    n_truncated: int = 0


@nb.njit(nogil=True)
def pairwise_sum(values):
    """Sum by a fixed binary tree over blocks of 8 (deterministic, O(eps log n))."""
    n = values.shape[0]
    if n == 0:
        return 0.0
    nblocks = (n + 7) // 8
    buf = np.empty(nblocks)
    for b in range(nblocks):
        s = 0.0
        for i in range(b * 8, min(n, b * 8 + 8)):
            s += values[i]
        buf[b] = s
    m = nblocks
    while m > 1:
        half = m // 2
        for i in range(half):
            buf[i] = buf[2 * i] + buf[2 * i + 1]
        if m % 2:
            buf[half] = buf[m - 1]
            m = half + 1
        else:
            m = half
    return buf[0]


def mean_and_variance(values):
    """Mean and unbiased sample variance with pairwise summation."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    n = values.shape[0]
    if n == 0:
        return math.nan, math.nan
    mean = pairwise_sum(values) / n
    if n == 1:
        return mean, 0.0
    dev = values - mean
    return mean, pairwise_sum(dev * dev) / (n - 1)


def _chunks(total, parts):
    parts = max(1, min(parts, total))
    base, extra = divmod(total, parts)
    start = 0
    for k in range(parts):
        size = base + (1 if k < extra else 0)
        yield start, size
        start += size


def simulate_point(kernel, x0, n_walks, seed, point_index, workers=1, executor=None):
    """Per-walk integrals, step counts and truncation flags, in walker order."""
    integral = np.empty(n_walks)
    steps = np.empty(n_walks, dtype=np.int64)
    truncated = np.empty(n_walks, dtype=np.bool_)

    def work(span):
        start, size = span
        i, s, t = kernel.run_batch(x0, seed, point_index, start, size)
        integral[start:start + size] = i
        steps[start:start + size] = s
        truncated[start:start + size] = t

    spans = list(_chunks(n_walks, workers))
    if executor is None or len(spans) == 1:
        for span in spans:
            work(span)
    else:
        list(executor.map(work, spans))
    return integral, steps, truncated


def _summarize(point, integral, steps, truncated, dt, policy, wall_time):
    n_trunc = int(truncated.sum())
    if n_trunc:
        if policy == "error":
            raise TruncatedWalkError(
                f"{n_trunc} of {len(integral)} walks from {point} hit max_steps"
            )
        keep = ~truncated
        integral = integral[keep]
        steps = steps[keep]
    n_eff = int(integral.shape[0])
    mean, var = mean_and_variance(integral)
    se = math.sqrt(var / n_eff) if n_eff else math.nan
    exit_time = (pairwise_sum(steps.astype(np.float64)) / n_eff) * dt if n_eff else math.nan
    return PointEstimate(
        point=np.array(point, dtype=np.float64),
        mean=float(mean),
        sample_variance=float(var),
        standard_error=float(se),
        n_effective=n_eff,
        mean_exit_time=float(exit_time),
        wall_time=wall_time,
        n_truncated=n_trunc,
    )


def _check_inside(scene, points):
    for k, p in enumerate(points):
        if not contains(scene.domain, p):
            raise ValueError(f"evaluation point {k} at {tuple(p)} is not inside the domain")


def estimate_many(scene, points, walker, cfg, point_offset=0, progress=None):
    """Estimate the potential (m^2/s^2) at every point.

    Parameters
    ----------
    scene : Scene
    points : array-like, shape (n, 3)
        Evaluation points in meters, all strictly inside the ball.
    walker : WalkerParams
    cfg : EstimatorConfig
    point_offset : int, optional
        Added to the point index when keying random streams.
    progress : callable, optional
        Called as ``progress(done, total)`` after each point.

    Returns
    -------
    list of PointEstimate
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.shape[1] != 3:
        raise ValueError(f"points must have shape (n, 3), got {points.shape}")
    _check_inside(scene, points)
    kernel = KernelInputs(scene, walker, cfg.precision)
    n = int(cfg.n_walks)
    out = []
    executor = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for j, p in enumerate(points):
            t0 = time.perf_counter()
            integral, steps, truncated = simulate_point(
                kernel, p, n, cfg.base_seed, point_offset + j, cfg.workers, executor
            )
            wall = time.perf_counter() - t0
            out.append(
                _summarize(p, integral, steps, truncated, float(walker.dt), cfg.truncation_policy, wall)
            )
            if progress is not None:
                progress(j + 1, len(points))
    finally:
        if executor is not None:
            executor.shutdown()
    return out


def estimate_potential(scene, x0, walker, cfg):
    """Estimate at a single point (stream family of point index 0)."""
    return estimate_many(scene, [x0], walker, cfg)[0]


def convergence_probe(scene, x0, walker, Ns, seed=0, precision="double"):
    """Standard error of the estimate at ``x0`` for each walk count in ``Ns``.

    The runs for different ``N`` use independent stream families.
    """
    Ns = [int(n) for n in Ns]
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ValueError("Ns must be strictly increasing")
    out = []
    for k, n in enumerate(Ns):
        cfg = EstimatorConfig(n_walks=n, base_seed=seed, precision=precision)
        est = estimate_many(scene, [x0], walker, cfg, point_offset=k)[0]
        out.append((n, est.standard_error))
    return out
