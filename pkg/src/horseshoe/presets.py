"""Built-in system configurations.

Each preset returns a plain JSON-able dict in the config schema consumed by
the CLI (see cli.load_config): two subsystem definitions, annulus seeds, an
optional schedule, tolerance overrides, and witness settings.
"""

from __future__ import annotations

import math

TOY_T1 = 60 * math.pi
TOY_T2 = 36 * math.pi


def toy():
    """Two rotational fields about (1, 0) and (-1, 0) with T = 2 pi (1 + r).

    Annuli between the unit and radius-2 circles; boundary periods 4 pi and
    6 pi, dwell scale T* = 12 pi.  The certified schedule (60 pi, 36 pi) is
    (5 T1*, 3 T2*).
    """
    return {
        "name": "toy",
        "subsystems": [
            {"kind": "general",
             "fx": "-y / (1 + sqrt((x-1)^2 + y^2))",
             "fy": "(x-1) / (1 + sqrt((x-1)^2 + y^2))",
             "center": [1.0, 0.0], "label": "1"},
            {"kind": "general",
             "fx": "y / (1 + sqrt((x+1)^2 + y^2))",
             "fy": "-(x+1) / (1 + sqrt((x+1)^2 + y^2))",
             "center": [-1.0, 0.0], "label": "2"},
        ],
        "seeds": [[[2.0, 0.0], [3.0, 0.0]], [[-2.0, 0.0], [-3.0, 0.0]]],
        "schedule": {"t1": TOY_T1, "t2": TOY_T2, "order": [1, 2]},
        "tolerances": {"rtol": 1e-10, "atol": 1e-12},
        "witness": {"n_connections": 8, "n_samples": 512},
    }


def sir():
    """Reduced seasonally forced SIR model, A = B = 1.

    x' = -y, y' = (1 + y)(x + a_i) with a_1 = -1, a_2 = 1; each subsystem
    conserves H = y - ln(1+y) + (x + a_i)^2 / 2.  Long dwell times demand the
    tight tolerance pair (1e-12, 1e-14).
    """
    return {
        "name": "sir",
        "subsystems": [
            {"kind": "general", "fx": "-y", "fy": "(1 + y) * (x - 1)",
             "center": [1.0, 0.0], "label": "1",
             "energy": "y - log(1 + y) + (x - 1)^2 / 2"},
            {"kind": "general", "fx": "-y", "fy": "(1 + y) * (x + 1)",
             "center": [-1.0, 0.0], "label": "2",
             "energy": "y - log(1 + y) + (x + 1)^2 / 2"},
        ],
        "seeds": [[[-1.0 / 3.0, 0.0], [-2.0 / 3.0, 0.0]],
                  [[1.0 / 3.0, 0.0], [2.0 / 3.0, 0.0]]],
        "tolerances": {"rtol": 1e-12, "atol": 1e-14},
        "witness": {"n_connections": 8, "n_samples": 512},
    }


def sir_newtonian():
    """Canonical Newtonian form of one SIR subsystem.

    The substitution q = ln(1+y), p = x + a maps x' = -y, y' = (1+y)(x+a)
    onto q' = p, p' = -(e^q - 1), so g(q) = e^q - 1 with energies
    p^2/2 + e^q - q - 1.  The seeds (0, -4/3) and (0, -5/3) carry the
    energies 8/9 and 25/18 of the annulus boundary orbits.
    """
    return {
        "name": "sir-newtonian",
        "subsystems": [
            {"kind": "newtonian", "g": "exp(x) - 1", "center_x": 0.0,
             "label": "1"},
        ],
        "seeds": [[[0.0, -4.0 / 3.0], [0.0, -5.0 / 3.0]]],
        "tolerances": {"rtol": 1e-12, "atol": 1e-14},
    }


def harmonic():
    """Single harmonic oscillator g(x) = x: the isochronous reference."""
    return {
        "name": "harmonic",
        "subsystems": [
            {"kind": "newtonian", "g": "x", "center_x": 0.0, "label": "1"},
        ],
        "seeds": [[[1.0, 0.0], [2.0, 0.0]]],
        "tolerances": {"rtol": 1e-10, "atol": 1e-12},
    }


def harmonic_pair():
    """Two translated harmonic oscillators: the isochronous negative control.

    The geometry matches the toy layout (unit/radius-2 circles about
    (+-1, 0)), but every orbit has period 2 pi, so certification must stop at
    the monotonicity stage.
    """
    return {
        "name": "harmonic-pair",
        "subsystems": [
            {"kind": "general", "fx": "-y", "fy": "x - 1",
             "center": [1.0, 0.0], "label": "1"},
            {"kind": "general", "fx": "y", "fy": "-(x + 1)",
             "center": [-1.0, 0.0], "label": "2"},
        ],
        "seeds": [[[2.0, 0.0], [3.0, 0.0]], [[-2.0, 0.0], [-3.0, 0.0]]],
        "tolerances": {"rtol": 1e-10, "atol": 1e-12},
    }


def pendulum_duffing():
    """A pendulum paired with a translated hardening Duffing oscillator."""
    return {
        "name": "pendulum-duffing",
        "subsystems": [
            {"kind": "newtonian", "g": "sin(x)", "center_x": 0.0,
             "label": "1"},
            {"kind": "newtonian", "g": "(x - 2) + (x - 2)^3", "center_x": 2.0,
             "label": "2"},
        ],
        "seeds": [[[1.2, 0.0], [2.2, 0.0]], [[0.9, 0.0], [0.5, 0.0]]],
        "tolerances": {"rtol": 1e-10, "atol": 1e-12},
    }


PRESETS = {
    "toy": toy,
    "sir": sir,
    "sir-newtonian": sir_newtonian,
    "harmonic": harmonic,
    "harmonic-pair": harmonic_pair,
    "pendulum-duffing": pendulum_duffing,
}


def preset_config(name):
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from "
                       f"{sorted(PRESETS)}") from None
