"""Computational domain, density model and unit policy.

Geometry is given in meters.  The walks are run in internal units of
``length_scale`` meters; under ``x -> x / L`` the Laplacian picks up a factor
``L**2``, so the source term handed to the walker is ``4 pi G rho L**2`` and
the path integral comes out directly in m^2/s^2.
"""

import math
from dataclasses import dataclass, field

import numpy as np

G_SI = 6.674e-11


def _vec3(value, name):
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {arr}")
    return arr


@dataclass(frozen=True, eq=False)
class BallDomain:
    """Ball ``|p - center| < radius``; the sphere itself counts as outside."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vec3(self.center, "center"))
        radius = float(self.radius)
        if not radius > 0 or not math.isfinite(radius):
            raise ValueError(f"radius must be positive and finite, got {self.radius!r}")
        object.__setattr__(self, "radius", radius)
        self.center.setflags(write=False)

    def scaled(self, length_scale):
        """The same ball expressed in units of ``length_scale`` meters."""
        return BallDomain(self.center / length_scale, self.radius / length_scale)


@dataclass(frozen=True, eq=False)
class Prism:
    """Axis-aligned box of constant density (kg/m^3), corners in meters."""

    min_corner: np.ndarray
    max_corner: np.ndarray
    density: float

    def __post_init__(self):
        lo = _vec3(self.min_corner, "min_corner")
        hi = _vec3(self.max_corner, "max_corner")
        if not np.all(lo < hi):
            raise ValueError(f"min_corner {lo} must be < max_corner {hi} componentwise")
        density = float(self.density)
        if not math.isfinite(density):
            raise ValueError(f"density must be finite, got {self.density!r}")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)
        object.__setattr__(self, "density", density)

    @property
    def volume(self):
        return float(np.prod(self.max_corner - self.min_corner))

    @property
    def mass(self):
        return self.density * self.volume

    @property
    def centroid(self):
        return 0.5 * (self.min_corner + self.max_corner)

    def corners(self):
        lo, hi = self.min_corner, self.max_corner
        return np.array(
            [[(lo, hi)[i][0], (lo, hi)[j][1], (lo, hi)[k][2]]
             for i in (0, 1) for j in (0, 1) for k in (0, 1)]
        )

    def contains(self, p):
        p = np.asarray(p, dtype=np.float64)
        return bool(np.all(self.min_corner <= p) and np.all(p < self.max_corner))

    def with_density(self, density):
        return Prism(self.min_corner, self.max_corner, density)


@dataclass(frozen=True, eq=False)
class Scene:
    """Ball domain plus piecewise-constant density.

    Density at a point is ``background_density`` unless the point lies in a
    prism, in which case the first matching prism (list order) wins.
    """

    domain: BallDomain
    prisms: tuple = field(default_factory=tuple)
    background_density: float = 0.0
    length_scale: float = 1.0
    gravitational_constant: float = G_SI

    def __post_init__(self):
        object.__setattr__(self, "prisms", tuple(self.prisms))
        for k, prism in enumerate(self.prisms):
            if not isinstance(prism, Prism):
                raise TypeError(f"prisms[{k}] is not a Prism")
            corners = prism.corners() - self.domain.center
            if np.max(np.linalg.norm(corners, axis=1)) >= self.domain.radius:
                raise ValueError(f"prisms[{k}] is not strictly inside the ball domain")
        L = float(self.length_scale)
        if not L > 0 or not math.isfinite(L):
            raise ValueError(f"length_scale must be positive, got {self.length_scale!r}")
        object.__setattr__(self, "length_scale", L)
        object.__setattr__(self, "background_density", float(self.background_density))
        object.__setattr__(self, "gravitational_constant", float(self.gravitational_constant))

    @property
    def G(self):
        return self.gravitational_constant

    def scale_densities(self, factor):
        """Copy of the scene with every density (background included) times ``factor``."""
        return Scene(
            self.domain,
            [p.with_density(p.density * factor) for p in self.prisms],
            self.background_density * factor,
            self.length_scale,
            self.gravitational_constant,
        )

    def source_from_density(self, rho):
        return ((4.0 * math.pi * self.gravitational_constant) * rho) * (
            self.length_scale * self.length_scale
        )

    def internal_arrays(self):
        """Geometry in internal units and per-prism source values for the kernels."""
        L = self.length_scale
        n = len(self.prisms)
        lo = np.empty((n, 3))
        hi = np.empty((n, 3))
        src = np.empty(n)
        for k, prism in enumerate(self.prisms):
            lo[k] = prism.min_corner / L
            hi[k] = prism.max_corner / L
            src[k] = self.source_from_density(prism.density)
        return lo, hi, src, self.source_from_density(self.background_density)


def density_at(scene, p):
    """Density (kg/m^3) at ``p`` (meters); half-open prism membership, first match."""
    p = np.asarray(p, dtype=np.float64)
    for prism in scene.prisms:
        if prism.contains(p):
            return prism.density
    return scene.background_density


def contains(domain, p):
    """True iff ``p`` lies strictly inside the ball."""
    d = np.asarray(p, dtype=np.float64) - domain.center
    return bool(np.dot(d, d) < domain.radius * domain.radius)


def source_term(scene, p):
    """Right-hand side ``4 pi G rho(p) L^2`` seen by the walker in internal units."""
    return scene.source_from_density(density_at(scene, p))


def total_anomalous_mass(scene):
    """Sum of density * volume over prisms, in kg."""
    return float(sum(p.mass for p in scene.prisms))
