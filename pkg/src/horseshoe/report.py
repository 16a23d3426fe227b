"""Aggregated certification report.

Collects the outcome of every pipeline stage (region condition, curvilinear
quadrilateral, monotonicity, dwell bounds, blocks, crossing witness) into one
JSON document with a reproducibility header of the tolerances used.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

VERDICT_CERTIFIED = "certified-witnessed"
VERDICT_NO_WITNESS = "conditions-hold-no-witness"

# pipeline stages in order, with their CLI exit codes
STAGES = ("condition_i", "quadrilateral", "monotonicity", "dwell_bounds",
          "blocks", "witness")
STAGE_EXIT = {name: code for code, name in enumerate(STAGES, start=3)}


def _round_floats(obj):
    """Recursively render floats with 17 significant digits (round-trip)."""
    if isinstance(obj, float):
        return float(f"{obj:.17g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(f"{float(obj):.17g}")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _round_floats(obj.tolist())
    return obj


@dataclass
class CertificationReport:
    name: str = ""
    tolerances: dict = field(default_factory=dict)
    condition_i: dict = None
    quadrilateral: dict = None
    monotonicity: dict = None         # per-subsystem certificates
    boundary_periods: dict = None
    dwell: dict = None                # T*, recommended schedules, windings
    blocks: list = None
    witness: dict = None
    entropy_bound: float = None
    improvement_note: str = ""
    verdict: str = ""
    failed_stage: str = ""
    diagnostics: str = ""

    def finish(self, witnessed, failed_stage=None, diagnostics=""):
        if failed_stage is not None:
            self.failed_stage = failed_stage
            self.verdict = f"failed:{failed_stage}"
            self.diagnostics = diagnostics
        else:
            self.verdict = VERDICT_CERTIFIED if witnessed else VERDICT_NO_WITNESS
        return self

    @property
    def exit_code(self):
        if self.verdict == VERDICT_CERTIFIED:
            return 0
        if self.verdict == VERDICT_NO_WITNESS:
            return 2
        return STAGE_EXIT.get(self.failed_stage, 1)

    def to_dict(self):
        return _round_floats({
            "name": self.name,
            "tolerances": self.tolerances,
            "condition_i": self.condition_i,
            "quadrilateral": self.quadrilateral,
            "monotonicity": self.monotonicity,
            "boundary_periods": self.boundary_periods,
            "dwell": self.dwell,
            "blocks": self.blocks,
            "witness": self.witness,
            "entropy_bound": self.entropy_bound,
            "improvement_note": self.improvement_note,
            "verdict": self.verdict,
            "failed_stage": self.failed_stage,
            "diagnostics": self.diagnostics,
        })

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def improvement_note(bounds):
    total = 5 * bounds.t1_star + 3 * bounds.t2_star
    prior = 6 * (bounds.t1_star + bounds.t2_star)
    return (f"certified total period {total:.17g} (5T1* + 3T2*) improves on "
            f"{prior:.17g} (6T1* + 6T2*, symmetric bound of earlier work)")
