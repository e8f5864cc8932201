"""Discretized diffusion paths and their trapezoidal path integrals.

A walk starts at ``x0``, moves by Euler-Maruyama steps
``x <- x + sqrt(2 dt) w`` and accumulates ``0.5 (f(x_n) + f(x_{n+1})) dt``
after every step, exit step included.  It stops at the first step whose
end point is outside the ball or, with the Brownian-bridge test enabled,
when a crossing between two inside points is detected.
"""

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from .rng import RandomStream, _u64, block_normals
from .scene import contains

EXIT_FULL = 0
EXIT_TRUNCATE = 1
_EXIT_RULES = {"full": EXIT_FULL, "truncate": EXIT_TRUNCATE}


@dataclass(frozen=True)
class WalkerParams:
    """Step size (internal time units), bridge switch and safety cap.

    ``max_steps=None`` means 100 times the expected number of steps from the
    ball center, see :func:`default_max_steps`.  ``exit_rule="truncate"``
    scales the exiting step's trapezoid term by the fraction of the step
    spent inside the ball instead of adding it in full.
    """

    dt: float
    bridge_enabled: bool = False
    max_steps: int = None
    exit_rule: str = "full"

    def __post_init__(self):
        if not (isinstance(self.dt, (int, float)) and math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be a positive number, got {self.dt!r}")
        if self.max_steps is not None and int(self.max_steps) < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps!r}")
        if self.exit_rule not in _EXIT_RULES:
            raise ValueError(f"exit_rule must be one of {sorted(_EXIT_RULES)}, got {self.exit_rule!r}")

    def resolve_max_steps(self, internal_radius):
        if self.max_steps is not None:
            return int(self.max_steps)
        return default_max_steps(internal_radius, self.dt)


def default_max_steps(internal_radius, dt):
    return max(1000, int(math.ceil(100.0 * internal_radius**2 / (6.0 * dt))))


@dataclass(frozen=True)
class WalkResult:
    integral: float
    exit_time: float
    steps: int
    exit_point: np.ndarray
    truncated: bool
    bridged: bool = False


def euler_maruyama_step(pos, dt, w):
    """``pos + sqrt(2 dt) w``."""
    pos = np.asarray(pos)
    return pos + np.sqrt(pos.dtype.type(2.0) * pos.dtype.type(dt)) * np.asarray(w, dtype=pos.dtype)


def step(pos, dt, stream):
    """One Euler-Maruyama step driven by the next normal triple of ``stream``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    return euler_maruyama_step(pos, dt, stream.normal3())


def bridge_exit_probability(d_in, d_out_prev, dt):
    """Probability that a bridge between two inside points touched the boundary.

    Half-space law for a diffusion with generator Laplacian (variance
    ``2 dt`` per coordinate): ``exp(-d_in * d_out_prev / dt)``, where the
    arguments are distances of both end points to the boundary.
    """
    if not dt > 0:
        return 0.0
    if d_in < 0 or d_out_prev < 0:
        raise ValueError("distances to the boundary must be non-negative")
    return math.exp(-d_in * d_out_prev / dt)


def _make_kernels(ftype):
    F = ftype
    zero = F(0.0)
    half = F(0.5)
    one = F(1.0)

    @nb.njit(inline="always")
    def source_at(x, y, z, lo, hi, src, src_bg):
        for k in range(src.shape[0]):
            if (lo[k, 0] <= x < hi[k, 0]) and (lo[k, 1] <= y < hi[k, 1]) and (lo[k, 2] <= z < hi[k, 2]):
                return src[k]
        return src_bg

    @nb.njit(nogil=True)
    def walk(x, y, z, lo, hi, src, src_bg, cx, cy, cz, radius, dt, bridge, exit_rule,
             max_steps, seed, point, walker, ctr0):
        """Run one walk; returns (integral, steps, truncated, bridged, ex, ey, ez)."""
        r2max = radius * radius
        s2dt = math.sqrt(F(2.0) * dt)
        dx = x - cx
        dy = y - cy
        dz = z - cz
        rr = dx * dx + dy * dy + dz * dz
        if rr >= r2max:
            return zero, 0, False, False, x, y, z
        # both end points farther than sqrt(40 dt) from the sphere give a bridge
        # probability below the smallest uniform the stream can produce
        gate = radius - math.sqrt(F(40.0) * dt)
        gate2 = gate * gate if gate > zero else F(-1.0)
        rr_prev = rr
        prev_inner = rr <= gate2
        f0 = source_at(x, y, z, lo, hi, src, src_bg)
        n_prisms = src.shape[0]
        acc = zero
        n = 0
        while n < max_steps:
            g0, g1, g2, gu = block_normals(seed, point, walker, np.uint64(ctr0 + n))
            w0 = F(g0)
            w1 = F(g1)
            w2 = F(g2)
            u = F(gu)
            nx = x + s2dt * w0
            ny = y + s2dt * w1
            nz = z + s2dt * w2
            # inlined lookup: passing arrays to a helper costs refcount traffic per step
            f1 = src_bg
            for k in range(n_prisms):
                if (lo[k, 0] <= nx < hi[k, 0]) and (lo[k, 1] <= ny < hi[k, 1]) and (lo[k, 2] <= nz < hi[k, 2]):
                    f1 = src[k]
                    break
            n += 1
            dx = nx - cx
            dy = ny - cy
            dz = nz - cz
            rr = dx * dx + dy * dy + dz * dz
            if rr >= r2max:
                # crossing point on the segment x -> nx
                ax = x - cx
                ay = y - cy
                az = z - cz
                sx = nx - x
                sy = ny - y
                sz = nz - z
                qa = sx * sx + sy * sy + sz * sz
                qb = ax * sx + ay * sy + az * sz
                qc = ax * ax + ay * ay + az * az - r2max
                disc = qb * qb - qa * qc
                if disc < zero:
                    disc = zero
                s = (-qb + math.sqrt(disc)) / qa
                if s > one:
                    s = one
                if s < zero:
                    s = zero
                ex = x + s * sx
                ey = y + s * sy
                ez = z + s * sz
                if exit_rule == EXIT_TRUNCATE:
                    fe = source_at(ex, ey, ez, lo, hi, src, src_bg)
                    acc += half * (f0 + fe) * (s * dt)
                else:
                    acc += half * (f0 + f1) * dt
                return acc, n, False, False, ex, ey, ez
            acc += half * (f0 + f1) * dt
            if bridge:
                inner = rr <= gate2
                if not (inner and prev_inner):
                    d_in = radius - math.sqrt(rr)
                    d_prev = radius - math.sqrt(rr_prev)
                    p = math.exp(-(d_in * d_prev) / dt)
                    if p > zero and u < p:
                        scale = radius / math.sqrt(rr)
                        return acc, n, False, True, cx + dx * scale, cy + dy * scale, cz + dz * scale
                prev_inner = inner
                rr_prev = rr
            x = nx
            y = ny
            z = nz
            f0 = f1
        return acc, n, True, False, x, y, z

    @nb.njit(nogil=True)
    def walk_batch(x, y, z, lo, hi, src, src_bg, cx, cy, cz, radius, dt, bridge, exit_rule,
                   max_steps, seed, point, walker_start, out_integral, out_steps, out_truncated):
        for i in range(out_integral.shape[0]):
            res = walk(x, y, z, lo, hi, src, src_bg, cx, cy, cz, radius, dt, bridge, exit_rule,
                       max_steps, seed, point, np.uint64(walker_start + i), 0)
            out_integral[i] = np.float64(res[0])
            out_steps[i] = res[1]
            out_truncated[i] = res[2]

    return walk, walk_batch


_walk64, _walk_batch64 = _make_kernels(np.float64)
_walk32, _walk_batch32 = _make_kernels(np.float32)


class KernelInputs:
    """Scene, start point and parameters cast once for the numba kernels."""

    def __init__(self, scene, params, precision="double"):
        if precision not in ("double", "single"):
            raise ValueError(f"precision must be 'double' or 'single', got {precision!r}")
        ft = np.float64 if precision == "double" else np.float32
        L = scene.length_scale
        lo, hi, src, src_bg = scene.internal_arrays()
        self.precision = precision
        self.ftype = ft
        self.lo = np.ascontiguousarray(lo, dtype=ft)
        self.hi = np.ascontiguousarray(hi, dtype=ft)
        self.src = np.ascontiguousarray(src, dtype=ft)
        self.src_bg = ft(src_bg)
        center = scene.domain.center / L
        self.center = tuple(ft(c) for c in center)
        self.radius = ft(scene.domain.radius / L)
        self.dt = ft(params.dt)
        self.bridge = bool(params.bridge_enabled)
        self.exit_rule = _EXIT_RULES[params.exit_rule]
        self.max_steps = params.resolve_max_steps(scene.domain.radius / L)
        self.length_scale = L

    @property
    def kernels(self):
        if self.precision == "double":
            return _walk64, _walk_batch64
        return _walk32, _walk_batch32

    def start(self, x0):
        x0 = np.asarray(x0, dtype=np.float64) / self.length_scale
        return tuple(self.ftype(c) for c in x0)

    def run_batch(self, x0, seed, point, walker_start, count):
        integral = np.empty(count, dtype=np.float64)
        steps = np.empty(count, dtype=np.int64)
        truncated = np.empty(count, dtype=np.bool_)
        if count:
            x, y, z = self.start(x0)
            self.kernels[1](
                x, y, z, self.lo, self.hi, self.src, self.src_bg, *self.center, self.radius,
                self.dt, self.bridge, self.exit_rule, self.max_steps,
                _u64(seed), _u64(point), int(walker_start), integral, steps, truncated,
            )
        return integral, steps, truncated


def run_walk(scene, x0, params, stream):
    """Simulate one path from ``x0`` (meters) until it leaves the ball.

    A start point exactly on the sphere exits immediately; a start point
    strictly outside raises ``ValueError``.  ``stream`` is advanced by the
    number of steps taken.  ``exit_point`` is returned in meters.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    d = x0 - scene.domain.center
    if float(np.dot(d, d)) > scene.domain.radius ** 2:
        raise ValueError(f"start point {x0} lies outside the domain")
    kin = KernelInputs(scene, params, getattr(stream, "precision", "double"))
    x, y, z = kin.start(x0)
    acc, n, truncated, bridged, ex, ey, ez = kin.kernels[0](
        x, y, z, kin.lo, kin.hi, kin.src, kin.src_bg, *kin.center, kin.radius, kin.dt,
        kin.bridge, kin.exit_rule, kin.max_steps,
        _u64(stream.seed), _u64(stream.point_index), _u64(stream.stream_id), int(stream.counter),
    )
    stream.counter += int(n)
    L = scene.length_scale
    return WalkResult(
        integral=float(acc),
        exit_time=int(n) * float(params.dt),
        steps=int(n),
        exit_point=np.array([ex, ey, ez], dtype=np.float64) * L,
        truncated=bool(truncated),
        bridged=bool(bridged),
    )


__all__ = [
    "RandomStream",
    "WalkResult",
    "WalkerParams",
    "bridge_exit_probability",
    "contains",
    "default_max_steps",
    "euler_maruyama_step",
    "run_walk",
    "step",
]
