"""Command-line front end.

Subcommands: ``periods`` (period profiles per subsystem), ``certify`` (full
certification pipeline), ``simulate`` (switching trajectory), ``witness``
(crossing verification only).  Systems come from a JSON config file
(--config) or a built-in preset (--preset); see load_config for the schema.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import presets
from .errors import (
    BandOutsideQuad,
    ConditionFails,
    ConfigError,
    EpsilonUnderflow,
    HorseshoeError,
    Isochronous,
)
from .geometry import build_quadrilateral, check_condition_i
from .monotone import certify_monotone
from .orbits import (
    AnnulusSpec,
    general_subsystem,
    hamiltonian_subsystem,
    newtonian_subsystem,
    period_profile,
    profile_to_csv,
)
from .report import (
    STAGE_EXIT,
    CertificationReport,
    improvement_note,
)
from .switching import (
    DwellBounds,
    SwitchingSchedule,
    build_blocks,
    recommend_schedule,
    simulate,
    verify_crossing,
)


def load_config(cfg):
    """Resolve a config dict into subsystems, annuli, and settings.

    Schema (JSON object):
      subsystems: list of one or two subsystem objects,
        {"kind": "general",     "fx": expr, "fy": expr, "center": [x, y],
         "energy": expr (optional), "label": str}
        {"kind": "hamiltonian", "h": expr, "center": [x, y]}
        {"kind": "newtonian",   "g": expr, "center_x": x}
      seeds: per subsystem, two points [[x, y], [x, y]] on the inner and
        outer annulus boundary orbits
      schedule:   optional {"t1": t, "t2": t, "order": [i, j]}
      tolerances: optional {"rtol": r, "atol": a}
      witness:    optional {"n_connections": n, "n_samples": m}
      name, out:  optional strings
    """
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    tol = cfg.get("tolerances", {})
    rtol = float(tol.get("rtol", 1e-10))
    atol = float(tol.get("atol", 1e-12))
    subs_cfg = cfg.get("subsystems")
    if not subs_cfg or len(subs_cfg) > 2:
        raise ConfigError("config needs one or two subsystem definitions")
    seeds = cfg.get("seeds")
    if not seeds or len(seeds) != len(subs_cfg):
        raise ConfigError("config needs matching per-subsystem seeds")

    systems, annuli = [], []
    for k, (sc, sd) in enumerate(zip(subs_cfg, seeds), start=1):
        label = str(sc.get("label", k))
        kind = sc.get("kind")
        try:
            if kind == "general":
                sys_k = general_subsystem(
                    sc["fx"], sc["fy"], sc["center"], label=label,
                    rtol=rtol, atol=atol, energy=sc.get("energy"))
            elif kind == "hamiltonian":
                sys_k = hamiltonian_subsystem(
                    sc["h"], sc["center"], label=label, rtol=rtol, atol=atol)
            elif kind == "newtonian":
                sys_k = newtonian_subsystem(
                    sc["g"], sc["center_x"], label=label, rtol=rtol, atol=atol)
            else:
                raise ConfigError(f"unknown subsystem kind {kind!r}")
        except KeyError as exc:
            raise ConfigError(f"subsystem {label}: missing field {exc}") from None
        inner, outer = (np.asarray(p, dtype=float) for p in sd)
        if not (np.isfinite(inner).all() and np.isfinite(outer).all()):
            raise ConfigError(f"subsystem {label}: seeds must be finite")
        systems.append(sys_k)
        annuli.append(AnnulusSpec.from_seeds(sys_k, inner, outer))

    schedule = None
    if "schedule" in cfg:
        s = cfg["schedule"]
        schedule = SwitchingSchedule(float(s["t1"]), float(s["t2"]),
                                     order=tuple(s.get("order", (1, 2))))
    return {
        "name": cfg.get("name", ""),
        "systems": systems,
        "annuli": annuli,
        "schedule": schedule,
        "rtol": rtol,
        "atol": atol,
        "witness": dict(cfg.get("witness", {})),
        "out": cfg.get("out"),
    }


def run_certify(resolved, n_grid=17, jobs=1, no_witness=False,
                witness_kw=None):
    """Run the full pipeline; returns (report, artifacts).

    Stops at the first failing stage; every completed stage's result stays in
    the report so partial failures remain diagnosable.
    """
    rep = CertificationReport(
        name=resolved["name"],
        tolerances={"rtol": resolved["rtol"], "atol": resolved["atol"],
                    "n_grid": n_grid})
    artifacts = {}
    sys1, sys2 = resolved["systems"]
    a1, a2 = resolved["annuli"]

    try:
        wit = check_condition_i(a1, a2)
    except ConditionFails as exc:
        return rep.finish(False, "condition_i", str(exc)), artifacts
    rep.condition_i = wit.to_dict()

    try:
        quad = build_quadrilateral(a1, a2, wit)
    except (EpsilonUnderflow, HorseshoeError) as exc:
        return rep.finish(False, "quadrilateral", str(exc)), artifacts
    rep.quadrilateral = quad.to_dict()
    artifacts["quad"] = quad

    certs = {}
    for k, a in ((1, a1), (2, a2)):
        cert = certify_monotone(a, n_grid=n_grid, jobs=jobs)
        certs[k] = cert
        rep.monotonicity = {str(i): c.to_dict() for i, c in certs.items()}
        if not cert.monotone:
            return rep.finish(False, "monotonicity",
                              f"subsystem {k}: {cert.verdict}"), artifacts

    periods = {}
    for k, (a, band) in ((1, (a1, quad.band1)), (2, (a2, quad.band2))):
        periods[k] = (float(a.period_at(band[0])), float(a.period_at(band[1])))
    rep.boundary_periods = {str(k): list(v) for k, v in periods.items()}
    try:
        bounds = DwellBounds.from_periods(periods[1], periods[2])
    except Isochronous as exc:
        return rep.finish(False, "dwell_bounds", str(exc)), artifacts
    sched_a, sched_b = recommend_schedule(bounds)
    schedule = resolved["schedule"] or sched_a
    windings = bounds.winding(schedule)
    rep.improvement_note = improvement_note(bounds)
    rep.dwell = {
        "bounds": bounds.to_dict(),
        "recommended_schedules": [sched_a.to_dict(), sched_b.to_dict()],
        "schedule": schedule.to_dict(),
        "winding_counts": list(windings),
    }
    artifacts["bounds"] = bounds
    artifacts["schedule"] = schedule

    primary = schedule.order[0]
    try:
        blocks = build_blocks(quad, schedule, a1 if primary == 1 else a2)
    except BandOutsideQuad as exc:
        return rep.finish(False, "blocks", str(exc)), artifacts
    rep.blocks = [b.to_dict() for b in blocks]
    artifacts["blocks"] = blocks

    if no_witness:
        return rep.finish(False), artifacts

    wkw = dict(resolved["witness"])
    wkw.update(witness_kw or {})
    witness = verify_crossing(sys1, sys2, schedule, quad, blocks,
                              a1 if primary == 1 else a2, strict=False, **wkw)
    artifacts["witness"] = witness
    rep.witness = {k: v for k, v in witness.to_dict().items() if k != "pairs"}
    rep.entropy_bound = witness.entropy_bound
    if not witness.passed:
        return rep.finish(False, "witness", witness.diagnostics), artifacts
    return rep.finish(True), artifacts


def _out_dir(args):
    out = os.environ.get("HORSESHOE_OUT") or args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _load(args):
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}")
    elif args.preset:
        try:
            cfg = presets.preset_config(args.preset)
        except KeyError as exc:
            raise ConfigError(str(exc))
    else:
        raise ConfigError("provide --config FILE or --preset NAME")
    if args.rtol is not None or args.atol is not None:
        tol = cfg.setdefault("tolerances", {})
        if args.rtol is not None:
            tol["rtol"] = args.rtol
        if args.atol is not None:
            tol["atol"] = args.atol
    return load_config(cfg)


def cmd_periods(args):
    resolved = _load(args)
    out = _out_dir(args)
    summary = {"name": resolved["name"], "subsystems": []}
    for k, a in enumerate(resolved["annuli"], start=1):
        prof = period_profile(a, n_grid=args.grid, jobs=args.jobs)
        profile_to_csv(prof, os.path.join(out, f"profile_{k}.csv"))
        summary["subsystems"].append({
            "label": a.subsystem.label,
            "boundary_periods": [float(a.period_at(0.0)),
                                 float(a.period_at(1.0))],
            "profile_csv": f"profile_{k}.csv",
        })
    path = os.path.join(out, "report.json")
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2)
    print(json.dumps(summary, indent=2))
    return 0


def cmd_certify(args):
    resolved = _load(args)
    if len(resolved["systems"]) != 2:
        raise ConfigError("certification needs two subsystems")
    out = _out_dir(args)
    rep, artifacts = run_certify(resolved, n_grid=args.grid, jobs=args.jobs,
                                 no_witness=args.no_witness)
    rep.to_json(os.path.join(out, "report.json"))
    if "quad" in artifacts:
        artifacts["quad"].to_json(os.path.join(out, "quad.json"))
    if "witness" in artifacts:
        artifacts["witness"].to_json(os.path.join(out, "witness.json"))
    print(f"{rep.verdict}  (exit {rep.exit_code})")
    return rep.exit_code


def cmd_witness(args):
    resolved = _load(args)
    if len(resolved["systems"]) != 2:
        raise ConfigError("witness needs two subsystems")
    out = _out_dir(args)
    rep, artifacts = run_certify(resolved, n_grid=args.grid, jobs=args.jobs)
    if "witness" not in artifacts:
        print(f"{rep.verdict}: {rep.diagnostics}")
        return rep.exit_code
    artifacts["witness"].to_json(os.path.join(out, "witness.json"))
    print("witness passed" if artifacts["witness"].passed
          else f"witness failed: {artifacts['witness'].diagnostics}")
    return 0 if artifacts["witness"].passed else STAGE_EXIT["witness"]


def cmd_simulate(args):
    resolved = _load(args)
    if len(resolved["systems"]) != 2:
        raise ConfigError("simulation needs two subsystems")
    out = _out_dir(args)
    schedule = resolved["schedule"]
    if schedule is None:
        a1, a2 = resolved["annuli"]
        bounds = DwellBounds.from_periods(
            (float(a1.period_at(0.0)), float(a1.period_at(1.0))),
            (float(a2.period_at(0.0)), float(a2.period_at(1.0))))
        schedule, _ = recommend_schedule(bounds)
    x0 = np.asarray(args.x0, dtype=float)
    traj = simulate(*resolved["systems"], schedule, x0, args.horizon)
    traj.to_csv(os.path.join(out, "orbit.csv"))
    np.savetxt(os.path.join(out, "switches.csv"),
               np.column_stack([traj.switch_times, traj.switch_states])
               if len(traj.switch_times) else np.empty((0, 3)),
               delimiter=",", header="t,x,y", comments="")
    print(f"simulated horizon {args.horizon:g} with {len(traj.ts)} samples, "
          f"{len(traj.switch_times)} switches -> orbit.csv")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="horseshoe",
        description="Certify topological horseshoes in planar periodic "
                    "switching systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--preset", help=f"built-in preset: "
                                        f"{', '.join(sorted(presets.PRESETS))}")
        p.add_argument("--grid", type=int, default=17,
                       help="grid size for profiles/certificates")
        p.add_argument("--jobs", type=int, default=1, help="worker cap")
        p.add_argument("--out", help="output directory (env HORSESHOE_OUT "
                                     "overrides)")
        p.add_argument("--rtol", type=float, default=None)
        p.add_argument("--atol", type=float, default=None)

    p = sub.add_parser("periods", help="period profile per subsystem")
    common(p)
    p.set_defaults(fn=cmd_periods)

    p = sub.add_parser("certify", help="full certification pipeline")
    common(p)
    p.add_argument("--no-witness", action="store_true",
                   help="stop after block construction")
    p.set_defaults(fn=cmd_certify)

    p = sub.add_parser("simulate", help="switching trajectory CSV")
    common(p)
    p.add_argument("--x0", type=float, nargs=2, required=True,
                   metavar=("X", "Y"))
    p.add_argument("--horizon", type=float, required=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("witness", help="crossing witness only")
    common(p)
    p.set_defaults(fn=cmd_witness)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ConditionFails as exc:
        print(f"condition (i) fails: {exc}", file=sys.stderr)
        return STAGE_EXIT["condition_i"]
    except EpsilonUnderflow as exc:
        print(f"quadrilateral construction failed: {exc}", file=sys.stderr)
        return STAGE_EXIT["quadrilateral"]
    except Isochronous as exc:
        print(f"dwell bounds undefined: {exc}", file=sys.stderr)
        return STAGE_EXIT["dwell_bounds"]
    except BandOutsideQuad as exc:
        print(f"block construction failed: {exc}", file=sys.stderr)
        return STAGE_EXIT["blocks"]
    except HorseshoeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
