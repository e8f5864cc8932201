import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fkgravity import BallDomain, Prism, Scene, contains, density_at, source_term, total_anomalous_mass

CUBE = Prism([0, 0, 0], [100, 100, 100], 2000.0)


def scene_with(prisms=(), L=1.0, background=0.0):
    return Scene(BallDomain([0, 0, 0], 1e4), prisms, background, L)


def test_density_inside_and_outside_cube():
    s = scene_with([CUBE])
    assert density_at(s, (50, 50, 50)) == 2000.0
    assert density_at(s, (50, 50, 150)) == 0.0
    assert density_at(scene_with(), (1, 2, 3)) == 0.0


def test_membership_is_half_open():
    s = scene_with([CUBE])
    assert density_at(s, (0, 0, 0)) == 2000.0
    assert density_at(s, (100, 50, 50)) == 0.0
    assert density_at(s, (np.nextafter(100, 0), 50, 50)) == 2000.0


def test_first_matching_prism_wins():
    a = Prism([0, 0, 0], [10, 10, 10], 1.0)
    b = Prism([5, 5, 5], [20, 20, 20], 7.0)
    assert density_at(scene_with([a, b]), (6, 6, 6)) == 1.0
    assert density_at(scene_with([b, a]), (6, 6, 6)) == 7.0


def test_density_agrees_with_brute_force(rng):
    prisms = [Prism(lo, lo + rng.uniform(5, 60, 3), rng.uniform(-500, 3000))
              for lo in rng.uniform(-200, 100, (6, 3))]
    s = scene_with(prisms, background=3.5)
    pts = rng.uniform(-220, 180, (100_000, 3))
    lo = np.array([p.min_corner for p in prisms])
    hi = np.array([p.max_corner for p in prisms])
    inside = np.all((pts[:, None, :] >= lo) & (pts[:, None, :] < hi), axis=2)
    first = np.where(inside.any(axis=1), inside.argmax(axis=1), -1)
    dens = np.array([p.density for p in prisms] + [3.5])
    expected = dens[first]
    got = np.array([density_at(s, p) for p in pts])
    np.testing.assert_array_equal(got, expected)
    assert inside.any(axis=1).sum() > 100


def test_contains_examples():
    d = BallDomain([1, 2, 3], 10)
    assert contains(d, (1, 2, 3))
    assert not contains(d, (11, 2, 3))
    assert contains(d, (1, 2, 3 + 9.999))


@settings(max_examples=200)
@given(st.floats(0, 50), st.floats(0, 50), st.floats(0, 2 * math.pi), st.floats(0, math.pi))
def test_contains_is_monotone_in_radius(r1, r2, phi, theta):
    d = BallDomain([0, 0, 0], 10)
    u = np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])
    near, far = sorted((r1, r2))
    if not contains(d, near * u):
        assert not contains(d, far * u)


def test_source_term_values():
    exact = 4 * math.pi * 6.674e-11 * 2000
    assert source_term(scene_with([CUBE]), (50, 50, 50)) == pytest.approx(exact, rel=1e-15)
    assert source_term(scene_with([CUBE]), (50, 50, 50)) == pytest.approx(1.6771e-6, rel=1e-3)
    assert source_term(scene_with([CUBE], L=1000.0), (50, 50, 50)) == pytest.approx(1.6771, rel=1e-3)
    assert source_term(scene_with([CUBE]), (50, 50, 500)) == 0.0


@settings(max_examples=200)
@given(st.floats(1e-3, 1e4), st.floats(-5e3, 5e3))
def test_source_scales_with_length_squared_exactly(L, rho):
    prism = Prism([0, 0, 0], [100, 100, 100], rho)
    unit = source_term(scene_with([prism]), (50, 50, 50))
    assert source_term(scene_with([prism], L=L), (50, 50, 50)) == (L * L) * unit


def test_total_mass():
    assert total_anomalous_mass(scene_with([CUBE])) == 2.0e9
    assert total_anomalous_mass(scene_with()) == 0.0
    twin = Prism([-200, 0, 0], [-100, 100, 100], 2000.0)
    assert total_anomalous_mass(scene_with([CUBE, twin])) == 4.0e9
    assert total_anomalous_mass(scene_with([CUBE], L=1000.0)) == 2.0e9


def test_validation():
    with pytest.raises(ValueError):
        BallDomain([0, 0, 0], 0)
    with pytest.raises(ValueError):
        Prism([0, 0, 0], [1, 0, 1], 1.0)
    with pytest.raises(ValueError):
        Prism([0, 0, 0], [1, 1, 1], math.inf)
    with pytest.raises(ValueError, match="prisms\\[0\\]"):
        Scene(BallDomain([0, 0, 0], 100), [Prism([0, 0, 0], [60, 60, 60], 1.0)])
    with pytest.raises(ValueError):
        scene_with(L=-1.0)
    # negative density contrast is allowed
    assert density_at(scene_with([CUBE.with_density(-300.0)]), (1, 1, 1)) == -300.0


def test_scale_densities():
    s = scene_with([CUBE], background=1.0).scale_densities(2.0)
    assert s.prisms[0].density == 4000.0 and s.background_density == 2.0
