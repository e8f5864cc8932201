"""Reference values: prism potentials, far-field limits and exit times.

The closed-form potential of a homogeneous box is the usual corner sum of
the antiderivative of ``1/r`` (Nagy's formula).  The independent check
``prism_potential_quad`` never touches that antiderivative: it writes the
box as a signed combination of boxes having the evaluation point as a
vertex, cuts each of those into three pyramids with apex at the point and
reduces each pyramid to a smooth one-dimensional integral that is handed to
adaptive quadrature.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .scene import total_anomalous_mass


@dataclass(frozen=True)
class QuadratureSpec:
    target_rel_tol: float = 1e-8
    max_subdivisions: int = 200

    def __post_init__(self):
        if not self.target_rel_tol > 0:
            raise ValueError("target_rel_tol must be positive")
        if int(self.max_subdivisions) < 1:
            raise ValueError("max_subdivisions must be >= 1")


def _log_plus(a, r):
    # log(a + r) without cancellation when a < 0 (r >= |a|)
    with np.errstate(divide="ignore", invalid="ignore"):
        rest = r * r - a * a
        out = np.where(a >= 0, np.log(a + r), np.log(np.maximum(rest, 0.0) / (r - a)))
    return out


def _xlog(coef, a, r):
    with np.errstate(divide="ignore", invalid="ignore"):
        val = coef * _log_plus(a, r)
    return np.where(coef == 0.0, 0.0, val)


def _sq_atan(s, num, r):
    with np.errstate(divide="ignore", invalid="ignore"):
        val = 0.5 * s * s * np.arctan(num / (s * r))
    return np.where(s == 0.0, 0.0, val)


def _corner_kernel(x, y, z):
    r = np.sqrt(x * x + y * y + z * z)
    return (
        _xlog(x * y, z, r)
        + _xlog(y * z, x, r)
        + _xlog(z * x, y, r)
        - _sq_atan(x, y * z, r)
        - _sq_atan(y, z * x, r)
        - _sq_atan(z, x * y, r)
    )


def box_inverse_distance_integral(lo, hi, points):
    """``int_box dV / |p - q|`` (m^2) for an array of points, closed form."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    total = np.zeros(points.shape[0])
    for i, xs in ((0, lo[0]), (1, hi[0])):
        for j, ys in ((0, lo[1]), (1, hi[1])):
            for k, zs in ((0, lo[2]), (1, hi[2])):
                sign = 1.0 if (i + j + k) % 2 == 1 else -1.0
                total += sign * _corner_kernel(xs - points[:, 0], ys - points[:, 1], zs - points[:, 2])
    return total


def prism_potential(prism, p, G):
    """Newtonian potential ``G rho int dV/r`` (m^2/s^2) of one prism.

    ``p`` may be a single point or an array of shape (n, 3); valid inside,
    on and outside the prism.
    """
    arr = np.asarray(p, dtype=np.float64)
    vals = G * prism.density * box_inverse_distance_integral(prism.min_corner, prism.max_corner, arr)
    return float(vals[0]) if arr.ndim == 1 else vals


def scene_potential(scene, points):
    """Free-space potential of every prism in the scene (superposition)."""
    arr = np.asarray(points, dtype=np.float64)
    pts = np.atleast_2d(arr)
    total = np.zeros(pts.shape[0])
    for prism in scene.prisms:
        total += prism_potential(prism, pts, scene.gravitational_constant)
    return float(total[0]) if arr.ndim == 1 else total


def _pyramid(a, b, c, spec):
    # int over {0<x<a, 0<y<b x/a, 0<z<c x/a} of 1/r = a^2/2 * int_0^{c/a} asinh((b/a)/sqrt(1+t^2)) dt
    if a == 0.0 or b == 0.0 or c == 0.0:
        return 0.0
    B = b / a

    def f(t):
        return math.asinh(B / math.sqrt(1.0 + t * t))

    val, _ = integrate.quad(
        f, 0.0, c / a, epsabs=0.0, epsrel=spec.target_rel_tol * 1e-2, limit=spec.max_subdivisions
    )
    return 0.5 * a * a * val


def _vertex_box(d, spec):
    # signed int over [0,dx]x[0,dy]x[0,dz] of 1/r, odd in each coordinate
    a, b, c = (abs(v) for v in d)
    sign = math.copysign(1.0, d[0]) * math.copysign(1.0, d[1]) * math.copysign(1.0, d[2])
    val = _pyramid(a, b, c, spec) + _pyramid(b, c, a, spec) + _pyramid(c, a, b, spec)
    return sign * val


def _axis_pieces(lo, hi, p):
    # [lo, hi] = [p, hi] - [p, lo] as signed intervals; when p is inside both
    # pieces are genuine and the second one has negative length
    return [(hi - p, 1.0), (lo - p, -1.0)]


def box_inverse_distance_integral_quad(lo, hi, p, spec=QuadratureSpec()):
    """Same integral as :func:`box_inverse_distance_integral`, by quadrature, one point."""
    p = np.asarray(p, dtype=np.float64)
    total = 0.0
    for dx, sx in _axis_pieces(lo[0], hi[0], p[0]):
        for dy, sy in _axis_pieces(lo[1], hi[1], p[1]):
            for dz, sz in _axis_pieces(lo[2], hi[2], p[2]):
                if dx == 0.0 or dy == 0.0 or dz == 0.0:
                    continue
                total += sx * sy * sz * _vertex_box((dx, dy, dz), spec)
    return total


def prism_potential_quad(prism, p, G, spec=QuadratureSpec()):
    """Prism potential at one point by adaptive quadrature (independent route)."""
    return G * prism.density * box_inverse_distance_integral_quad(
        prism.min_corner, prism.max_corner, p, spec
    )


def prism_gz(prism, p, dz, G):
    """Vertical acceleration ``du/dz`` (m/s^2) by a centered difference of the potential."""
    if not dz > 0:
        raise ValueError(f"dz must be positive, got {dz!r}")
    arr = np.asarray(p, dtype=np.float64)
    pts = np.atleast_2d(arr)
    up = pts + np.array([0.0, 0.0, dz])
    down = pts - np.array([0.0, 0.0, dz])
    vals = (prism_potential(prism, up, G) - prism_potential(prism, down, G)) / (2.0 * dz)
    return float(vals[0]) if arr.ndim == 1 else vals


def scene_gz(scene, points, dz):
    arr = np.asarray(points, dtype=np.float64)
    pts = np.atleast_2d(arr)
    total = np.zeros(pts.shape[0])
    for prism in scene.prisms:
        total += prism_gz(prism, pts, dz, scene.gravitational_constant)
    return float(total[0]) if arr.ndim == 1 else total


def point_mass_potential(mass, center, p, G):
    r = np.linalg.norm(np.atleast_2d(np.asarray(p, dtype=np.float64)) - np.asarray(center), axis=1)
    vals = G * mass / r
    return float(vals[0]) if np.asarray(p).ndim == 1 else vals


def point_mass_gz(mass, center, p, G):
    d = np.atleast_2d(np.asarray(p, dtype=np.float64)) - np.asarray(center)
    r = np.linalg.norm(d, axis=1)
    vals = -G * mass * d[:, 2] / r**3
    return float(vals[0]) if np.asarray(p).ndim == 1 else vals


def boundary_error_estimate(scene):
    """Expected constant offset ``G M / R`` (m^2/s^2) caused by zero data on the sphere."""
    return scene.gravitational_constant * total_anomalous_mass(scene) / scene.domain.radius


def mean_exit_time(domain, x0, length_scale=1.0):
    """Expected first exit time ``(R^2 - |x0 - c|^2) / 6`` of the generator-Laplacian diffusion.

    Geometry in meters; the result is in internal time units of
    ``length_scale`` meters.
    """
    d = np.asarray(x0, dtype=np.float64) - domain.center
    rr = float(np.dot(d, d))
    if rr > domain.radius**2:
        raise ValueError(f"{x0} lies outside the domain")
    return (domain.radius**2 - rr) / (6.0 * length_scale**2)
