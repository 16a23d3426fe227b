import numpy as np
import pytest

from horseshoe.errors import NoEventBeforeTmax
from horseshoe.ode import (
    EventSpec,
    FieldFn,
    flow_points,
    integrate,
    integrate_until_event,
)

ROTATION = FieldFn(lambda x, y: (-y, x), label="rotation")


def test_harmonic_rotation_closes():
    traj = integrate(ROTATION, (1.0, 0.0), 2 * np.pi, rtol=1e-10, atol=1e-12)
    assert np.linalg.norm(traj.endpoint - [1.0, 0.0]) < 1e-8


def test_dense_output_matches_analytic():
    traj = integrate(ROTATION, (1.0, 0.0), np.pi)
    ts = np.linspace(0, np.pi, 50)
    states = traj.interpolate(ts)
    np.testing.assert_allclose(states[:, 0], np.cos(ts), atol=1e-8)
    np.testing.assert_allclose(states[:, 1], np.sin(ts), atol=1e-8)


def test_zero_horizon():
    traj = integrate(ROTATION, (0.5, 0.5), 0.0)
    assert traj.ts[-1] == 0.0
    np.testing.assert_allclose(traj.endpoint, [0.5, 0.5])


def test_tolerance_refinement_never_hurts():
    # monotone convergence on a smooth problem over 4 tolerance decades
    errs = []
    for k in range(4):
        rtol = 10.0 ** (-6 - 2 * k)
        traj = integrate(ROTATION, (1.0, 0.0), 2 * np.pi,
                         rtol=rtol, atol=rtol * 1e-2)
        errs.append(np.linalg.norm(traj.endpoint - [1.0, 0.0]))
    assert all(e2 <= e1 * 1.01 for e1, e2 in zip(errs, errs[1:]))


def test_event_detects_ray_return():
    # first return of the rotation to the positive-x axis is at t = 2 pi
    event = EventSpec(h=lambda x, y: y, direction="rising",
                      guard=lambda x, y: x)
    t, state, _ = integrate_until_event(ROTATION, (1.0, 0.0), event,
                                        t_max=10.0, t_min=1e-3)
    assert t == pytest.approx(2 * np.pi, abs=1e-10)
    np.testing.assert_allclose(state, [1.0, 0.0], atol=1e-9)


def test_event_counting():
    event = EventSpec(h=lambda x, y: y, direction="any", count=3)
    t, _, _ = integrate_until_event(ROTATION, (1.0, 0.0), event,
                                    t_max=20.0, t_min=1e-3)
    assert t == pytest.approx(3 * np.pi, abs=1e-9)


def test_no_event_raises():
    event = EventSpec(h=lambda x, y: x - 5.0)
    with pytest.raises(NoEventBeforeTmax):
        integrate_until_event(ROTATION, (1.0, 0.0), event, t_max=5.0,
                              t_min=1e-3)


def test_sir_first_return_period():
    # return to the anchor ray through (-1/3, 0) about the center (1, 0)
    fld = FieldFn(lambda x, y: (-y, (1 + y) * (x - 1)), label="sir1")
    event = EventSpec(h=lambda x, y: y, direction="falling",
                      guard=lambda x, y: 1 - x)
    t, state, _ = integrate_until_event(fld, (-1.0 / 3.0, 0.0), event,
                                        t_max=20.0, t_min=1e-3,
                                        rtol=1e-12, atol=1e-14)
    assert t == pytest.approx(6.7552385419, abs=1e-8)


def test_flow_points_matches_individual_integration():
    pts = np.array([[1.0, 0.0], [0.0, 1.5], [-0.3, 0.7], [2.0, -1.0]])
    batch = flow_points(ROTATION, pts, 1.234)
    for p, q in zip(pts, batch):
        traj = integrate(ROTATION, p, 1.234)
        np.testing.assert_allclose(q, traj.endpoint, atol=1e-9)
