"""End-to-end acceptance checks, one per headline capability.

Each test prints a single PASS/FAIL line so the suite doubles as a
checklist when run with ``pytest -s tests/test_acceptance.py``.
"""
import math
import time

import numpy as np
import pytest

from horseshoe.cli import main, run_certify
from horseshoe.errors import BandOutsideQuad, Isochronous
from horseshoe.monotone import certify_monotone, certify_numeric, chow_wang_H
from horseshoe.orbits import (
    AnnulusSpec,
    measure_period,
    newtonian_subsystem,
    period_profile,
)
from horseshoe.report import improvement_note
from horseshoe.switching import (
    DwellBounds,
    SwitchingSchedule,
    dwell_star,
    recommend_schedule,
    verify_crossing,
)

TOY_SCHEDULE = SwitchingSchedule(60 * np.pi, 36 * np.pi)


def _report(name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else ""))
    assert ok, f"{name}: {detail}"


def test_acceptance_1_toy_periods(toy):
    t0 = time.perf_counter()
    sys1 = toy["systems"][0]
    p_inner, _ = measure_period(sys1, (0.0, 0.0))
    p_outer, _ = measure_period(sys1, (-1.0, 0.0))
    dt = time.perf_counter() - t0
    err = max(abs(p_inner - 4 * np.pi), abs(p_outer - 6 * np.pi))
    _report("toy periods 4pi/6pi at (0,0)/(-1,0)",
            err < 1e-6 and dt < 5.0,
            f"max abs err {err:.2e}, {dt:.2f} s")


def test_acceptance_2_toy_dwell_star():
    star = dwell_star(4 * np.pi, 6 * np.pi)
    err = abs(star - 12 * np.pi)
    _report("toy T* = 12pi", err < 1e-8, f"abs err {err:.2e}")


def test_acceptance_3_sir_periods(sir):
    t0 = time.perf_counter()
    a1, _ = sir["annuli"]
    p1 = float(a1.period_at(0.0))   # inner boundary orbit, energy 8/9
    p2 = float(a1.period_at(1.0))   # outer boundary orbit, energy 25/18
    star = dwell_star(p1, p2)
    dt = time.perf_counter() - t0
    e1 = abs(p1 - 6.7552385419)
    e2 = abs(p2 - 7.0239110513)
    es = abs(star - 176.602342958647)
    _report("SIR periods and T*",
            e1 < 1e-8 and e2 < 1e-8 and es < 1e-6 and dt < 30.0,
            f"period errs {e1:.1e}/{e2:.1e}, T* err {es:.1e}, {dt:.2f} s")


def test_acceptance_4_area_period_consistency(sir_newtonian):
    # in canonical coordinates the derivative of the enclosed area with
    # respect to energy equals the period
    a1 = sir_newtonian["annuli"][0]
    prof = period_profile(a1, n_grid=41)
    h = np.array([p.energy for p in prof])
    area = np.array([p.area for p in prof])
    period = np.array([p.period for p in prof])
    idx = np.arange(4, 40, 4)  # 9 interior evaluation points
    dA = (area[idx + 1] - area[idx - 1]) / (h[idx + 1] - h[idx - 1])
    rel = np.abs(dA - period[idx]) / period[idx]
    _report("area-rate equals period on SIR annulus (9 interior points)",
            rel.size == 9 and np.max(rel) < 1e-4,
            f"max rel err {np.max(rel):.2e}")


def test_acceptance_5_monotonicity_criterion(sir):
    harmonic = newtonian_subsystem("x", 0.0)
    hmax = max(abs(float(chow_wang_H(harmonic, x))) for x in np.linspace(-10, 10, 81))
    pend = newtonian_subsystem("sin(x)", 0.0)
    xs = np.concatenate([np.linspace(-np.pi + 1e-3, -1e-3, 40),
                         np.linspace(1e-3, np.pi - 1e-3, 40)])
    hvals = np.array([float(chow_wang_H(pend, x)) for x in xs])
    pend_annulus = AnnulusSpec.from_seeds(pend, (0.4, 0.0), (2.4, 0.0))
    agree = []
    for sysname, ann in [
        ("pendulum", pend_annulus),
        ("duffing", AnnulusSpec.from_seeds(
            newtonian_subsystem("(x - 2) + (x - 2)^3", 2.0),
            (2.2, 0.0), (3.0, 0.0))),
        ("harmonic", AnnulusSpec.from_seeds(harmonic, (0.5, 0.0), (2.0, 0.0))),
    ]:
        analytic = certify_monotone(ann, n_grid=20, prefer_analytic=True)
        numeric = certify_numeric(ann, n_grid=20)
        agree.append(analytic.verdict == numeric.verdict)
    pend_cert = certify_monotone(pend_annulus, prefer_analytic=True)
    ok = (hmax <= 1e-12 and np.all(hvals > 0)
          and pend_cert.verdict == "increasing" and all(agree))
    _report("monotonicity criterion (identity zero, pendulum > 0, oracle agreement)",
            ok, f"|H|max harmonic {hmax:.1e}, min pendulum H {hvals.min():.2e}, "
                f"verdicts agree {agree}")


def test_acceptance_6_toy_witness(toy, toy_quad, toy_blocks):
    t0 = time.perf_counter()
    sys1, sys2 = toy["systems"]
    _, quad = toy_quad
    a1 = toy["annuli"][0]
    coarse = verify_crossing(sys1, sys2, TOY_SCHEDULE, quad, toy_blocks, a1,
                             n_connections=8, n_samples=512)
    fine = verify_crossing(sys1, sys2, TOY_SCHEDULE, quad, toy_blocks, a1,
                           n_connections=8, n_samples=2048)
    dt = time.perf_counter() - t0
    ok = (coarse.passed and fine.passed
          and len(coarse.pairs) == 4 and len(fine.pairs) == 4
          and abs(coarse.entropy_bound - math.log(2)) < 1e-15
          and dt < 180.0)
    _report("toy horseshoe witness (8x512, stable at 2048, entropy log 2)",
            ok, f"passed {coarse.passed}/{fine.passed}, "
                f"entropy {coarse.entropy_bound:.6f}, {dt:.1f} s")


def test_acceptance_7_winding_arithmetic():
    bounds = DwellBounds(t1_star=12 * np.pi, t2_star=12 * np.pi,
                         periods1=(4 * np.pi, 6 * np.pi),
                         periods2=(4 * np.pi, 6 * np.pi))
    n_hi, n_lo = bounds.winding(TOY_SCHEDULE)
    rng = np.random.default_rng(2026)
    gaps = []
    for _ in range(100):
        t1 = bounds.t1_star * rng.uniform(5.0, 25.0)
        a, b = bounds.winding(SwitchingSchedule(t1, TOY_SCHEDULE.t2))
        gaps.append(a - b)
    ok = (n_hi, n_lo) == (15, 10) and min(gaps) >= 5
    _report("winding counts (15, 10) and gap >= 5 on 100 random schedules",
            ok, f"toy ({n_hi}, {n_lo}), min gap {min(gaps)}")


def test_acceptance_8_negative_controls(toy, tmp_path):
    code_iso = main(["certify", "--preset", "harmonic-pair",
                     "--out", str(tmp_path)])
    resolved = dict(toy)
    resolved["schedule"] = SwitchingSchedule(24 * np.pi, TOY_SCHEDULE.t2)
    rep, _ = run_certify(resolved)
    ok = code_iso == 5 and rep.exit_code == 7 and rep.verdict == "failed:blocks"
    _report("negative controls (isochronous -> exit 5, short dwell -> exit 7)",
            ok, f"isochronous exit {code_iso}, short-dwell exit {rep.exit_code}")


def test_acceptance_9_schedule_improvement(sir):
    a1, a2 = sir["annuli"]
    bounds = DwellBounds.from_periods(
        (float(a1.period_at(0.0)), float(a1.period_at(1.0))),
        (float(a2.period_at(0.0)), float(a2.period_at(1.0))))
    schedule, _ = recommend_schedule(bounds)
    symmetric = 6 * bounds.t1_star + 6 * bounds.t2_star
    note = improvement_note(bounds)
    ok = (schedule.period < symmetric
          and f"{schedule.period:.17g}" in note
          and f"{symmetric:.17g}" in note)
    _report("asymmetric schedule beats symmetric bound and report says so",
            ok, f"8T*-style period {schedule.period:.6f} < {symmetric:.6f}")
