"""Independent expectation of the discretized estimator.

Ignoring the sphere, the position after ``n`` Euler-Maruyama steps is
Gaussian with per-coordinate variance ``2 n dt``, so the expected
trapezoid sum over an infinite path is

    f dt (0.5 [x0 in box] + sum_{n >= 1} P(x_n in box)),

a product of error-function differences per step.  Stopping at the sphere
removes, to leading order, the constant ``G M / R`` (what the free-space
potential is worth on the sphere), which gives the expected value of the
estimator at finite ``dt``.
"""

import numpy as np
from scipy.special import erf


def discrete_free_sum(x0_m, lo_m, hi_m, density, dt, length_scale, G=6.674e-11, n_max=400_000):
    x = np.asarray(x0_m, dtype=np.float64) / length_scale
    lo = np.asarray(lo_m, dtype=np.float64) / length_scale
    hi = np.asarray(hi_m, dtype=np.float64) / length_scale
    f = 4.0 * np.pi * G * density * length_scale**2
    n = np.arange(1, n_max, dtype=np.float64)
    s = np.sqrt(4.0 * n * dt)
    p = np.ones_like(s)
    for k in range(3):
        p *= 0.5 * (erf((hi[k] - x[k]) / s) - erf((lo[k] - x[k]) / s))
    inside = bool(np.all((lo <= x) & (x < hi)))
    return f * dt * (p.sum() + (0.5 if inside else 0.0))


def discrete_estimator_mean(x0_m, lo_m, hi_m, density, dt, length_scale, radius_m, G=6.674e-11):
    mass = density * np.prod(np.asarray(hi_m) - np.asarray(lo_m))
    return discrete_free_sum(x0_m, lo_m, hi_m, density, dt, length_scale, G) - G * mass / radius_m
