"""Certification of topological horseshoes in planar periodic switching systems.

Pipeline: closed-orbit annuli around each subsystem's center, the region
overlap condition, a curvilinear quadrilateral, period-function monotonicity,
dwell-time bounds, horseshoe blocks, and a numerical crossing witness for the
composed Poincare map.
"""

from . import errors
from .expr import compile_numpy, differentiate, parse, pretty, simplify
from .geometry import (
    Quadrilateral,
    RegionWitness,
    build_quadrilateral,
    check_condition_i,
    curve_intersections,
)
from .monotone import (
    MonotonicityCertificate,
    certify_chow_wang,
    certify_monotone,
    certify_numeric,
    chow_wang_H,
)
from .orbits import (
    AnnulusSpec,
    ClosedOrbit,
    OrbitChart,
    coordinate_of_point,
    enclosed_area,
    general_subsystem,
    hamiltonian_subsystem,
    measure_period,
    newtonian_subsystem,
    orbit_from_coordinate,
    period_profile,
    polygon_area,
    profile_to_csv,
)
from .presets import PRESETS, preset_config
from .report import CertificationReport, improvement_note
from .switching import (
    Block,
    DwellBounds,
    HorseshoeWitness,
    SwitchingSchedule,
    SwitchTrajectory,
    build_blocks,
    dwell_star,
    poincare_map,
    recommend_schedule,
    semi_map,
    simulate,
    verify_crossing,
    winding_counts,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
