import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horseshoe.errors import HypothesisViolated, NoBracket, NotInRegion
from horseshoe.orbits import (
    AnnulusSpec,
    coordinate_of_point,
    enclosed_area,
    general_subsystem,
    measure_period,
    newtonian_subsystem,
    orbit_from_coordinate,
    period_profile,
    polygon_area,
)


def pendulum_period(amplitude):
    """Closed-form pendulum period 4 K(m) via the arithmetic-geometric mean."""
    m = math.sin(amplitude / 2) ** 2
    a, b = 1.0, math.sqrt(1.0 - m)
    for _ in range(60):
        if abs(a - b) <= 4e-16 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return 2.0 * math.pi / a


def test_polygon_area_square():
    sq = np.array([[0, 0], [2, 0], [2, 2], [0, 2]], dtype=float)
    assert polygon_area(sq) == pytest.approx(4.0)


def test_harmonic_orbit_period_and_area():
    sys = newtonian_subsystem("x", 0.0)
    T, orbit = measure_period(sys, (1.5, 0.0))
    assert T == pytest.approx(2 * np.pi, abs=1e-9)
    assert orbit.area == pytest.approx(np.pi * 1.5**2, rel=1e-8)
    assert orbit.is_closed and orbit.is_simple


def test_pendulum_period_matches_elliptic_integral():
    sys = newtonian_subsystem("sin(x)", 0.0)
    for a in (0.5, 1.0, 2.2):
        T, _ = measure_period(sys, (a, 0.0))
        assert T == pytest.approx(pendulum_period(a), abs=1e-8)
    assert pendulum_period(1.0) == pytest.approx(6.700049, abs=1e-4)


def test_period_is_parameterization_independent():
    sys = newtonian_subsystem("sin(x)", 0.0)
    T1, orbit = measure_period(sys, (1.0, 0.0))
    # pick another point on the same orbit and measure again
    other = orbit.points[len(orbit.points) // 3]
    T2, _ = measure_period(sys, other)
    assert T2 == pytest.approx(T1, abs=1e-8)


def test_enclosed_area_matches_shoelace():
    sys = newtonian_subsystem("x + x^3", 0.0)
    _, orbit = measure_period(sys, (1.0, 0.0), n_samples=2048)
    assert enclosed_area(orbit) == pytest.approx(
        abs(polygon_area(orbit.points[:-1])), rel=1e-5)


def test_newtonian_center_check():
    with pytest.raises(HypothesisViolated):
        newtonian_subsystem("-x", 0.0)      # g'(center) < 0: not a center


def test_toy_annulus_chart_roundtrip(toy):
    a1 = toy["annuli"][0]
    chart = a1.chart()
    rng = np.random.default_rng(7)
    c = rng.uniform(0.02, 0.98, 64)
    th = rng.uniform(0, 2 * np.pi, 64)
    pts = chart.point(c, th)
    back = a1.coordinate_batch(pts)
    np.testing.assert_allclose(back, c, atol=1e-8)


def test_toy_coordinate_closed_form(toy):
    # orbits are circles about (1, 0); area pi r^2 gives c = (r^2 - 1) / 3
    a1 = toy["annuli"][0]
    rng = np.random.default_rng(3)
    r = rng.uniform(1.05, 1.95, 32)
    th = rng.uniform(0, 2 * np.pi, 32)
    pts = np.column_stack([1 + r * np.cos(th), r * np.sin(th)])
    np.testing.assert_allclose(a1.coordinate_batch(pts), (r**2 - 1) / 3,
                               atol=1e-7)


def test_orbit_from_coordinate_roundtrip(toy):
    a1 = toy["annuli"][0]
    for c in (0.2, 0.5, 0.9):
        orbit = orbit_from_coordinate(a1, c)
        assert coordinate_of_point(a1, orbit.points[0]) == pytest.approx(
            c, abs=1e-7)


def test_coordinate_outside_region_raises(toy):
    a1 = toy["annuli"][0]
    with pytest.raises(NotInRegion):
        coordinate_of_point(a1, np.array([50.0, 50.0]))


def test_annulus_requires_nesting():
    sys = newtonian_subsystem("x", 0.0)
    _, inner = measure_period(sys, (1.0, 0.0))
    _, outer = measure_period(sys, (2.0, 0.0))
    with pytest.raises((HypothesisViolated, NoBracket)):
        AnnulusSpec(subsystem=sys, inner=outer, outer=inner)


def test_period_profile_monotone_columns(toy):
    a1 = toy["annuli"][0]
    prof = period_profile(a1, n_grid=7)
    cs = [p.c for p in prof]
    areas = [p.area for p in prof]
    periods = [p.period for p in prof]
    assert all(np.diff(cs) > 0)
    assert all(np.diff(areas) > 0)           # area grows with the coordinate
    # toy closed form T = 2 pi (1 + r), r = sqrt(1 + 3 c)
    for p in prof:
        expect = 2 * np.pi * (1 + np.sqrt(1 + 3 * p.c))
        assert p.period == pytest.approx(expect, abs=1e-7)
    assert all(np.diff(periods) > 0)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 2.4))
def test_energy_matches_hamiltonian_level(a):
    sys = newtonian_subsystem("sin(x)", 0.0)
    # energy of the seed (a, 0) is G(a) = 1 - cos(a)
    assert sys.energy(np.array([a, 0.0])) == pytest.approx(
        1 - math.cos(a), abs=1e-9)


def test_general_subsystem_center_refinement():
    sys = general_subsystem("-y + 0.0*x", "x - 1", (0.9, 0.1))
    np.testing.assert_allclose(sys.center, [1.0, 0.0], atol=1e-9)
