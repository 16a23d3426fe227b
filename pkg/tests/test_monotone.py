import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horseshoe.monotone import (
    certify_chow_wang,
    certify_monotone,
    certify_numeric,
    chow_wang_H,
)
from horseshoe.orbits import AnnulusSpec, measure_period, newtonian_subsystem


def profile_verdict(sys, seeds, n=20):
    """Brute-force monotonicity oracle: measure T at n energies."""
    lo, hi = sorted(np.hypot(*np.subtract(s, (sys.center[0], 0)))
                    for s in seeds)
    xs = sys.center[0] + np.linspace(lo, hi, n)
    Ts = np.array([measure_period(sys, (x, 0.0))[0] for x in xs])
    d = np.diff(Ts)
    if np.all(d > 0):
        return "increasing"
    if np.all(d < 0):
        return "decreasing"
    if np.max(np.abs(Ts - Ts.mean())) < 1e-8 * Ts.mean():
        return "isochronous"
    return "inconclusive"


def test_harmonic_H_vanishes():
    sys = newtonian_subsystem("x", 0.0)
    xs = np.linspace(-10, 10, 201)
    H = chow_wang_H(sys, xs)
    assert np.max(np.abs(H)) <= 1e-12


def test_pendulum_H_positive_and_increasing():
    sys = newtonian_subsystem("sin(x)", 0.0)
    xs = np.linspace(-np.pi + 1e-3, np.pi - 1e-3, 301)
    H = chow_wang_H(sys, xs)
    off = np.abs(xs) > 1e-2
    assert np.all(H[off] > 0)
    cert = certify_chow_wang(sys, interval=(-np.pi + 1e-6, np.pi - 1e-6))
    assert cert.verdict == "increasing"


def test_duffing_H_negative_and_decreasing():
    sys = newtonian_subsystem("x + x^3", 0.0)
    cert = certify_chow_wang(sys, h=2.0)
    assert cert.verdict == "decreasing"
    xs = np.linspace(-1.5, 1.5, 101)
    H = chow_wang_H(sys, xs)
    assert np.all(H[np.abs(xs) > 1e-2] < 0)


def test_harmonic_isochronous_certificate():
    sys = newtonian_subsystem("x", 0.0)
    cert = certify_chow_wang(sys, h=2.0)
    assert cert.verdict == "isochronous"


@pytest.mark.parametrize("g,seeds", [
    ("sin(x)", ((0.8, 0.0), (2.0, 0.0))),
    ("x + x^3", ((0.5, 0.0), (1.2, 0.0))),
    ("x", ((1.0, 0.0), (2.0, 0.0))),
])
def test_analytic_agrees_with_profile_oracle(g, seeds):
    sys = newtonian_subsystem(g, 0.0)
    h = sys.energy(np.asarray(seeds[1]))
    cert = certify_chow_wang(sys, h=float(h))
    assert cert.verdict == profile_verdict(sys, seeds)


def test_numeric_certificate_on_annulus():
    sys = newtonian_subsystem("sin(x)", 0.0)
    ann = AnnulusSpec.from_seeds(sys, (0.8, 0.0), (2.0, 0.0))
    cert = certify_numeric(ann, n_grid=9)
    assert cert.verdict == "increasing"
    assert cert.monotone


def test_numeric_certificate_isochronous():
    sys = newtonian_subsystem("x", 0.0)
    ann = AnnulusSpec.from_seeds(sys, (1.0, 0.0), (2.0, 0.0))
    cert = certify_numeric(ann, n_grid=7)
    assert cert.verdict == "isochronous"
    assert not cert.monotone


def test_certify_monotone_prefers_analytic():
    sys = newtonian_subsystem("x + x^3", 0.0)
    ann = AnnulusSpec.from_seeds(sys, (0.5, 0.0), (1.2, 0.0))
    cert = certify_monotone(ann)
    assert cert.method == "chow-wang"
    assert cert.verdict == "decreasing"


@settings(max_examples=10, deadline=None)
@given(st.floats(-0.8, 0.8))
def test_H_translation_invariance(shift):
    # translating the restoring force translates H: the verdict and values
    # are invariant under x -> x - shift
    base = newtonian_subsystem("x + x^3", 0.0)
    moved = newtonian_subsystem(f"(x - ({shift!r})) + (x - ({shift!r}))^3",
                                shift)
    xs = np.linspace(-0.7, 0.7, 31)
    np.testing.assert_allclose(chow_wang_H(moved, xs + shift),
                               chow_wang_H(base, xs), atol=1e-9)


def test_local_softening_expansion_sign():
    # g = x + eps x^3 gives H ~ -3.5 eps x^4 near the center, so a softening
    # spring (eps < 0) has H > 0: period increasing
    eps = -0.1
    sys = newtonian_subsystem(f"x + ({eps})*x^3", 0.0)
    xs = np.linspace(-0.3, 0.3, 41)
    H = chow_wang_H(sys, xs)
    off = np.abs(xs) > 0.05
    np.testing.assert_allclose(H[off], -3.5 * eps * xs[off]**4, rtol=0.2)
    assert np.all(H[off] > 0)
