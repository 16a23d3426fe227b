import numpy as np
import pytest

from horseshoe import presets
from horseshoe.cli import load_config
from horseshoe.geometry import build_quadrilateral, check_condition_i
from horseshoe.switching import SwitchingSchedule, build_blocks

TOY_SCHEDULE = SwitchingSchedule(60 * np.pi, 36 * np.pi)


@pytest.fixture(scope="session")
def toy():
    """Resolved toy preset: systems, annuli, schedule."""
    return load_config(presets.toy())


@pytest.fixture(scope="session")
def toy_quad(toy):
    a1, a2 = toy["annuli"]
    witness = check_condition_i(a1, a2)
    quad = build_quadrilateral(a1, a2, witness)
    return witness, quad


@pytest.fixture(scope="session")
def toy_blocks(toy, toy_quad):
    _, quad = toy_quad
    return build_blocks(quad, TOY_SCHEDULE, toy["annuli"][0])


@pytest.fixture(scope="session")
def sir():
    """Resolved SIR preset (original plane, conserved energy attached)."""
    return load_config(presets.sir())


@pytest.fixture(scope="session")
def sir_newtonian():
    """Canonical Newtonian form of SIR subsystem 1 with its annulus."""
    return load_config(presets.sir_newtonian())
