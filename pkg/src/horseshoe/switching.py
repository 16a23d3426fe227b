"""Dwell-time bounds, switching simulation, blocks, and the crossing witness.

The switching system runs subsystem 1 for dwell time T1, then subsystem 2 for
T2, periodically.  The dwell-time scale T* of each subsystem certifies the
horseshoe: T_i >= 5 T_i* and T_j >= 3 T_j* winds the blocks of the composed
Poincare map across each other.  The witness machinery samples connections of
block edges, maps them through the composed flow, and searches the images for
sub-arcs that cross the target block between its two period-level edges.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from shapely import contains_xy
from shapely.geometry import Polygon

from .errors import BandOutsideQuad, Isochronous, WitnessFailed
from .ode import DEFAULT_ATOL, DEFAULT_RTOL, flow_points, integrate

ISO_TOL = 1e-9     # relative period gap below which T* is reported divergent
EDGE_TOL = 1e-6    # edge membership tolerance, orbit-coordinate space
ENTROPY_BOUND = math.log(2.0)


# --- dwell-time arithmetic ----------------------------------------------------

def dwell_star(p_low, p_high, iso_tol=ISO_TOL):
    """Characteristic dwell-time scale T* = p_low p_high / |p_high - p_low|."""
    if p_low <= 0 or p_high <= 0:
        raise ValueError("periods must be positive")
    gap = abs(p_high - p_low)
    if gap <= iso_tol * max(p_low, p_high):
        raise Isochronous(p_low, p_high)
    return p_low * p_high / gap


def winding_counts(t1, p_low, p_high):
    """(N1, n1) = (floor(T1/p_low), floor(T1/p_high)) for p_low < p_high."""
    lo, hi = sorted((p_low, p_high))
    # guard against ratios landing a few ulps below an integer
    def f(x):
        return int(math.floor(x * (1.0 + 1e-12)))
    return f(t1 / lo), f(t1 / hi)


@dataclass
class SwitchingSchedule:
    """Fixed dwell times; ``order`` names the subsystem that runs first."""
    t1: float
    t2: float
    order: tuple = (1, 2)
    label: str = ""

    def __post_init__(self):
        if not (self.t1 > 0 and self.t2 > 0):
            raise ValueError("dwell times must be positive")

    @property
    def period(self):
        return self.t1 + self.t2

    def dwell(self, k):
        return self.t1 if k == 1 else self.t2

    def to_dict(self):
        return {"t1": self.t1, "t2": self.t2, "order": list(self.order),
                "period": self.period, "label": self.label}


@dataclass
class DwellBounds:
    """Per-subsystem dwell-time scales with the boundary periods behind them."""
    t1_star: float
    t2_star: float
    periods1: tuple      # (T_1(c~_1), T_1(C~_1))
    periods2: tuple

    @classmethod
    def from_periods(cls, periods1, periods2, iso_tol=ISO_TOL):
        return cls(t1_star=dwell_star(*periods1, iso_tol=iso_tol),
                   t2_star=dwell_star(*periods2, iso_tol=iso_tol),
                   periods1=tuple(periods1), periods2=tuple(periods2))

    def winding(self, schedule):
        """(N1, n1) for the subsystem that runs first under the schedule."""
        p = self.periods1 if schedule.order[0] == 1 else self.periods2
        N1, n1 = winding_counts(schedule.dwell(schedule.order[0]), *p)
        t_first = schedule.dwell(schedule.order[0])
        star = self.t1_star if schedule.order[0] == 1 else self.t2_star
        if t_first >= 5 * star:
            assert N1 - n1 >= 5, "winding gap below 5 despite T >= 5T*"
        return N1, n1

    def to_dict(self):
        return {"t1_star": self.t1_star, "t2_star": self.t2_star,
                "periods1": list(self.periods1), "periods2": list(self.periods2)}


def recommend_schedule(bounds):
    """The two minimal certified schedules (5T1*, 3T2*) and (3T1*, 5T2*).

    The second regime certifies the composition taken in the other order, so
    its schedule marks subsystem 2 as the first-running (twisting) subsystem.
    The total period 5T* + 3T* = 8T* improves on the symmetric 6T* + 6T* = 12T*
    bound of earlier work.
    """
    s_a = SwitchingSchedule(5 * bounds.t1_star, 3 * bounds.t2_star, order=(1, 2),
                            label="5T1*,3T2*")
    s_b = SwitchingSchedule(3 * bounds.t1_star, 5 * bounds.t2_star, order=(2, 1),
                            label="3T1*,5T2*")
    return s_a, s_b


# --- flow maps and simulation ---------------------------------------------------

def semi_map(sys, t, points, rtol=None, atol=None):
    """Fixed-dwell-time flow map of one subsystem on a batch of points."""
    rtol = sys.rtol if rtol is None else rtol
    atol = sys.atol if atol is None else atol
    return flow_points(sys.field, points, t, rtol=rtol, atol=atol)


def poincare_map(sys1, sys2, schedule, points, rtol=None, atol=None):
    """Composed Poincare map on a batch of points (or a single point).

    Runs the subsystems in schedule order for their dwell times.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    systems = {1: sys1, 2: sys2}
    for k in schedule.order:
        pts = semi_map(systems[k], schedule.dwell(k), pts, rtol=rtol, atol=atol)
    return pts[0] if np.ndim(points) == 1 else pts


@dataclass
class SwitchTrajectory:
    ts: np.ndarray
    states: np.ndarray
    phases: np.ndarray          # subsystem index active at each sample
    switch_times: np.ndarray
    switch_states: np.ndarray

    @property
    def endpoint(self):
        return self.states[-1]

    def to_csv(self, path):
        data = np.column_stack([self.ts, self.states, self.phases])
        np.savetxt(path, data, delimiter=",", header="t,x,y,phase", comments="")


def simulate(sys1, sys2, schedule, x0, horizon, samples_per_dwell=200,
             rtol=None, atol=None):
    """Simulate the switching system over [0, horizon].

    The subsystems alternate in schedule order for their dwell times; the last
    segment is truncated at the horizon.  A zero horizon yields the bare
    initial state.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    systems = {1: sys1, 2: sys2}
    x = np.asarray(x0, dtype=float)
    ts, states, phases = [], [], []
    sw_t, sw_x = [], []
    t0 = 0.0
    while t0 < horizon * (1 - 1e-15):
        for k in schedule.order:
            sys = systems[k]
            dt = min(schedule.dwell(k), horizon - t0)
            if dt <= 0:
                break
            n = max(2, int(round(samples_per_dwell * dt / schedule.dwell(k))))
            traj = integrate(sys.field, x, dt,
                             rtol=sys.rtol if rtol is None else rtol,
                             atol=sys.atol if atol is None else atol,
                             t_eval=np.linspace(0.0, dt, n + 1), dense=False)
            ts.append(t0 + traj.ts[:-1])
            states.append(traj.states[:-1])
            phases.append(np.full(len(traj.ts) - 1, k))
            x = traj.endpoint
            t0 += dt
            if t0 < horizon * (1 - 1e-15):
                sw_t.append(t0)
                sw_x.append(x.copy())
    ts.append(np.array([t0]))
    states.append(x[None, :])
    phases.append(np.array([schedule.order[0 if t0 == 0 else -1]]))
    return SwitchTrajectory(
        ts=np.concatenate(ts), states=np.vstack(states),
        phases=np.concatenate(phases),
        switch_times=np.asarray(sw_t, dtype=float),
        switch_states=(np.vstack(sw_x) if sw_x else np.empty((0, 2))))


# --- blocks --------------------------------------------------------------------

@dataclass
class Block:
    """Compact subset of the quadrilateral between two period-level curves."""
    name: str                  # "Q1" | "Q2"
    ratios: tuple              # (k_edge1, k_edge3) integer winding ratios
    c_levels: dict             # ratio k -> orbit coordinate of the level curve
    c_lo: float
    c_hi: float
    edges: dict                # edge index 1..4 -> polyline
    theta2: tuple              # (c values, angles) along the quad edge on side 2
    theta4: tuple

    def theta_at(self, c, side):
        cs, ths = self.theta2 if side == 2 else self.theta4
        return np.interp(np.asarray(c, dtype=float), cs, ths)

    def contains(self, annulus, quad_poly, points, tol=EDGE_TOL):
        pts = np.atleast_2d(points)
        c = np.atleast_1d(annulus.coordinate_batch(pts))
        in_band = (c >= self.c_lo - tol) & (c <= self.c_hi + tol)
        in_quad = contains_xy(quad_poly, pts[:, 0], pts[:, 1])
        return in_band & in_quad

    def to_dict(self):
        return {"name": self.name, "ratios": list(self.ratios),
                "c_levels": {str(k): v for k, v in self.c_levels.items()},
                "c_range": [self.c_lo, self.c_hi]}


def _quad_side_tables(quad, annulus, primary):
    """(c, angle-about-primary-center) tables along the two non-primary edges."""
    other = 2 if primary == 1 else 1
    side_arcs = [a for a in quad.arcs if a.subsystem == other]
    lo_val = min(a.coordinate for a in side_arcs)
    center = annulus.subsystem.center
    tables = {}
    for a in side_arcs:
        rel = a.points - center
        th = np.unwrap(np.arctan2(rel[:, 1], rel[:, 0]))
        c = np.atleast_1d(annulus.coordinate_batch(a.points))
        order = np.argsort(c)
        side = 4 if a.coordinate == lo_val else 2
        tables[side] = (c[order], th[order])
    # put both tables on the same 2-pi branch so angle blends take the short
    # way around the center
    c_mid = 0.5 * (tables[4][0][len(tables[4][0]) // 2]
                   + tables[2][0][len(tables[2][0]) // 2])
    th4 = np.interp(c_mid, *tables[4])
    th2 = np.interp(c_mid, *tables[2])
    shift = 2 * np.pi * round((th4 - th2) / (2 * np.pi))
    tables[2] = (tables[2][0], tables[2][1] + shift)
    return tables


def build_blocks(quad, schedule, annulus, primary=None, n_edge=257,
                 edge_tol=EDGE_TOL):
    """The two horseshoe blocks of the first-running subsystem inside the quad.

    Level curves T_first / period = k are located by inverting the chart's
    period interpolant over the quadrilateral's coordinate band.  Raises
    BandOutsideQuad when a required level does not fit inside the band.
    """
    primary = schedule.order[0] if primary is None else primary
    t_first = schedule.dwell(primary)
    band = quad.band1 if primary == 1 else quad.band2
    chart = annulus.chart()
    p_lo, p_hi = (float(chart.period_at(band[0])), float(chart.period_at(band[1])))
    p_min, p_max = sorted((p_lo, p_hi))
    N1, n1 = winding_counts(t_first, p_min, p_max)
    if N1 - 2 < n1 + 3:
        raise BandOutsideQuad((n1 + 3, N1 - 2), (p_min, p_max))

    def c_of_ratio(k):
        target = t_first / k
        if not p_min <= target <= p_max:
            raise BandOutsideQuad(k, (p_min, p_max))
        return float(brentq(lambda c: float(chart.period_at(c)) - target,
                            band[0], band[1], xtol=1e-14))

    tables = _quad_side_tables(quad, annulus, primary)
    blocks = []
    for name, (k1, k3) in (("Q1", (n1 + 1, n1 + 3)), ("Q2", (N1 - 2, N1))):
        c_levels = {k: c_of_ratio(k) for k in (k1, k3)}
        c_lo, c_hi = sorted(c_levels.values())
        edges = {}
        for idx, k in ((1, k1), (3, k3)):
            c = c_levels[k]
            th = np.linspace(np.interp(c, *tables[4]), np.interp(c, *tables[2]),
                             n_edge)
            edges[idx] = chart.point(np.full(n_edge, c), th)
        for side in (2, 4):
            cs, ths = tables[side]
            keep = (cs >= c_lo - edge_tol) & (cs <= c_hi + edge_tol)
            csel = np.clip(np.linspace(c_lo, c_hi, n_edge), cs[0], cs[-1])
            edges[side] = chart.point(csel, np.interp(csel, cs, ths))
        blocks.append(Block(name=name, ratios=(k1, k3), c_levels=c_levels,
                            c_lo=c_lo, c_hi=c_hi, edges=edges,
                            theta2=tables[2], theta4=tables[4]))
    return tuple(blocks)


# --- crossing witness ------------------------------------------------------------

@dataclass
class ConnectionResult:
    blend: float
    passed: bool
    t_interval: tuple = None
    c_endpoints: tuple = None
    edge_distances: tuple = None
    diagnostic: str = ""

    def to_dict(self):
        return {"blend": self.blend, "passed": self.passed,
                "t_interval": list(self.t_interval) if self.t_interval else None,
                "c_endpoints": list(self.c_endpoints) if self.c_endpoints else None,
                "edge_distances": (list(self.edge_distances)
                                   if self.edge_distances else None),
                "diagnostic": self.diagnostic}


@dataclass
class HorseshoeWitness:
    passed: bool
    pairs: dict                 # "Q1->Q2" -> list of ConnectionResult dicts
    entropy_bound: float
    n_connections: int
    n_samples: int
    schedule: dict
    diagnostics: str = ""
    images: dict = field(default=None, repr=False)   # block -> (m, n, 2) polylines

    def images_to_csv(self, prefix):
        """One CSV per source block with the mapped connection polylines."""
        if self.images is None:
            raise ValueError("witness was built without keep_images")
        for name, arr in self.images.items():
            m, n, _ = arr.shape
            conn = np.repeat(np.arange(m), n)
            flat = arr.reshape(m * n, 2)
            np.savetxt(f"{prefix}_{name}.csv",
                       np.column_stack([conn, flat]), delimiter=",",
                       header="connection,x,y", comments="")

    def to_dict(self):
        return {"passed": self.passed, "entropy_bound": self.entropy_bound,
                "n_connections": self.n_connections, "n_samples": self.n_samples,
                "schedule": self.schedule,
                "pairs": {k: [c.to_dict() for c in v]
                          for k, v in self.pairs.items()},
                "diagnostics": self.diagnostics}

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


class _ConnectionFamily:
    """Connections of a source block's two period-level edges.

    Connection ``s`` at parameter ``t`` sits on the level curve interpolated
    between the block's edge-1 and edge-3 coordinates, at an angle blended
    between the two quad sides; s = 0 and s = 1 run along the sides themselves.
    """

    def __init__(self, block, chart):
        self.block = block
        self.chart = chart
        self.c1 = block.c_levels[block.ratios[0]]
        self.c3 = block.c_levels[block.ratios[1]]

    def points(self, s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        c = self.c1 + t * (self.c3 - self.c1)
        th4 = self.block.theta_at(c, 4)
        th2 = self.block.theta_at(c, 2)
        th = (1.0 - s) * th4 + s * th2
        return self.chart.point(c, th)


def _runs_of(mask):
    """Maximal runs of True in a boolean vector: list of (start, stop) incl."""
    idx = np.nonzero(mask)[0]
    if len(idx) == 0:
        return []
    breaks = np.nonzero(np.diff(idx) > 1)[0]
    starts = np.concatenate([[idx[0]], idx[breaks + 1]])
    stops = np.concatenate([idx[breaks], [idx[-1]]])
    return list(zip(starts, stops))


def verify_crossing(sys1, sys2, schedule, quad, blocks, annulus,
                    n_connections=8, n_samples=512, edge_tol=EDGE_TOL,
                    rtol=None, atol=None, strict=True, max_bisect=40,
                    keep_images=False):
    """Numerical crossing witness for the composed Poincare map.

    For every ordered block pair, every sampled connection of the source
    block's period-level edges must map to a curve containing a sub-arc that
    stays inside the target block and reaches both of its period-level edges
    within ``edge_tol`` in coordinate space.  Returns a HorseshoeWitness; with
    ``strict`` a failing pair raises WitnessFailed instead.
    """
    systems = {1: sys1, 2: sys2}
    base = Polygon(quad.ring)
    xmin, ymin, xmax, ymax = base.bounds
    quad_poly = base.buffer(0.1 * edge_tol * max(1.0, xmax - xmin, ymax - ymin))
    blends = np.linspace(0.0, 1.0, n_connections)
    t_grid = np.linspace(0.0, 1.0, n_samples)
    families = {b.name: _ConnectionFamily(b, annulus.chart()) for b in blocks}

    def pmap(points):
        return poincare_map(systems[schedule.order[0]],
                            systems[schedule.order[1]],
                            SwitchingSchedule(schedule.dwell(schedule.order[0]),
                                              schedule.dwell(schedule.order[1]),
                                              order=(1, 2)),
                            points, rtol=rtol, atol=atol)

    # map all connection samples of each source block in one batched call
    images = {}
    for b in blocks:
        fam = families[b.name]
        S, T = np.meshgrid(blends, t_grid, indexing="ij")
        pts = fam.points(S.ravel(), T.ravel())
        img = pmap(pts)
        images[b.name] = img.reshape(n_connections, n_samples, 2)

    pair_results = {}
    failures = []
    refine_queue = []   # (pair_key, conn index, fam, lo_t, hi_t, record)

    for src in blocks:
        for tgt in blocks:
            key = f"{src.name}->{tgt.name}"
            img = images[src.name]
            results = []
            for m, s in enumerate(blends):
                rec = _check_connection(
                    img[m], tgt, annulus, quad_poly, t_grid, edge_tol, s)
                if rec.passed is None:
                    refine_queue.append((key, m, families[src.name], rec))
                results.append(rec)
            pair_results[key] = results

    # batched endpoint refinement: drive each candidate run end onto its edge
    _refine_runs(refine_queue, pmap, annulus, quad_poly, edge_tol, max_bisect)

    passed = True
    for key, results in pair_results.items():
        for rec in results:
            if rec.passed is None:
                rec.passed = False
                rec.diagnostic = rec.diagnostic or "refinement did not converge"
            if not rec.passed:
                passed = False
                failures.append((key, rec.blend, rec.diagnostic))

    if not passed and strict:
        key, blend, diag = failures[0]
        raise WitnessFailed(key, blend, diag)

    wit = HorseshoeWitness(
        passed=passed, pairs=pair_results,
        entropy_bound=ENTROPY_BOUND if passed else 0.0,
        n_connections=n_connections, n_samples=n_samples,
        schedule=schedule.to_dict(),
        diagnostics="" if passed else f"{len(failures)} failing connections")
    if keep_images:
        wit.images = images
    return wit


def _check_connection(img_row, tgt, annulus, quad_poly, t_grid, edge_tol, blend):
    """Collect candidate in-block runs of one mapped connection.

    Returns a ConnectionResult; ``passed`` is None when candidate runs were
    found whose ends still need bisection refinement.  Even a single in-block
    sample is a candidate: the refinement pass grows it outward to the block
    boundary, so coarse sample grids still locate full crossings.
    """
    c_img = np.atleast_1d(annulus.coordinate_batch(img_row))
    in_band = (c_img >= tgt.c_lo - edge_tol) & (c_img <= tgt.c_hi + edge_tol)
    in_quad = contains_xy(quad_poly, img_row[:, 0], img_row[:, 1])
    mask = in_band & in_quad
    runs = _runs_of(mask)
    if not runs:
        return ConnectionResult(blend=float(blend), passed=False,
                                diagnostic="image never enters target block")
    rec = ConnectionResult(blend=float(blend), passed=None)
    rec._runs = [(t_grid[a], t_grid[b],
                  t_grid[a] - (t_grid[1] - t_grid[0]) if a > 0 else t_grid[a],
                  t_grid[b] + (t_grid[1] - t_grid[0])
                  if b < len(t_grid) - 1 else t_grid[b])
                 for a, b in runs]
    rec._tgt = tgt
    return rec


def _refine_runs(queue, pmap, annulus, quad_poly, edge_tol, max_bisect):
    """Bisect every candidate run end in lock-step batches and judge records.

    Each task drives one run end from its last in-block parameter toward the
    adjacent out-of-block parameter until the image sits on the block boundary;
    a record passes when some run's two refined ends land on opposite
    period-level edges within edge_tol.
    """
    if not queue:
        return
    tasks = []
    for key, m, fam, rec in queue:
        for r, (t_in_lo, t_in_hi, t_out_lo, t_out_hi) in enumerate(rec._runs):
            for side, t_in, t_out in (("lo", t_in_lo, t_out_lo),
                                      ("hi", t_in_hi, t_out_hi)):
                tasks.append({"fam": fam, "rec": rec, "run": r,
                              "blend": rec.blend, "in": t_in, "out": t_out,
                              "side": side})

    for _ in range(max_bisect):
        gaps = np.array([abs(t["in"] - t["out"]) for t in tasks])
        live = gaps > 1e-13
        if not live.any():
            break
        idx = np.nonzero(live)[0]
        mids = np.array([0.5 * (tasks[i]["in"] + tasks[i]["out"]) for i in idx])
        pts = np.vstack([tasks[i]["fam"].points(tasks[i]["blend"], m)
                         for i, m in zip(idx, mids)])
        img = pmap(pts)
        c_img = np.atleast_1d(annulus.coordinate_batch(img))
        in_quad = contains_xy(quad_poly, img[:, 0], img[:, 1])
        for i, mid, c, q in zip(idx, mids, c_img, in_quad):
            t = tasks[i]
            tgt = t["rec"]._tgt
            inside = bool(q) and (tgt.c_lo - edge_tol <= c <= tgt.c_hi + edge_tol)
            if inside:
                t["in"] = mid
                t["c_in"] = float(c)
            else:
                t["out"] = mid

    # gather refined ends per (record, run) and judge each record: it passes
    # when any of its runs crosses the block from one level edge to the other
    per_rec = {}
    for t in tasks:
        per_rec.setdefault(id(t["rec"]), {"rec": t["rec"], "runs": {}})
        per_rec[id(t["rec"])]["runs"].setdefault(t["run"], {})[t["side"]] = t
    for entry in per_rec.values():
        rec = entry["rec"]
        tgt = rec._tgt
        best = None
        for ends in entry["runs"].values():
            if not all(s in ends and "c_in" in ends[s] for s in ("lo", "hi")):
                continue
            c_a, c_b = ends["lo"]["c_in"], ends["hi"]["c_in"]
            t_a, t_b = ends["lo"]["in"], ends["hi"]["in"]
            d = sorted([min(abs(c_a - tgt.c_lo), abs(c_a - tgt.c_hi)),
                        min(abs(c_b - tgt.c_lo), abs(c_b - tgt.c_hi))])
            opposite = (abs(c_a - tgt.c_lo) <= edge_tol and
                        abs(c_b - tgt.c_hi) <= edge_tol) or (
                        abs(c_a - tgt.c_hi) <= edge_tol and
                        abs(c_b - tgt.c_lo) <= edge_tol)
            cand = (not opposite, sum(d), (t_a, t_b), (c_a, c_b), tuple(d))
            if best is None or cand < best:
                best = cand
        if best is None:
            rec.passed = False
            rec.diagnostic = "run endpoint refinement lost the block"
        else:
            fail, _, rec.t_interval, rec.c_endpoints, rec.edge_distances = best
            rec.passed = not fail
            if fail:
                rec.diagnostic = ("no run reaches both period-level edges "
                                  f"(best distances {rec.edge_distances[0]:.2e},"
                                  f" {rec.edge_distances[1]:.2e})")
        del rec._runs, rec._tgt
