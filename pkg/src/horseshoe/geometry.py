"""Overlap condition and curvilinear quadrilateral construction.

Certifies that one boundary orbit of annulus 1 crosses annulus 2 transversally
(the overlap condition), then builds the curvilinear quadrilateral bounded by
two orbits of each subsystem inside the annulus intersection.  Four cases are
distinguished by which boundary orbit does the crossing and on which side it
leaves; the quadrilateral edges carry the coordinate values that later fix the
dwell-time scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import LineString, Point, Polygon
from shapely.geometry.base import BaseGeometry

from .errors import ConditionFails, DegenerateOverlap, EpsilonUnderflow
from .orbits import orbit_from_coordinate

MEMBERSHIP_TOL = 1e-6

# case tag -> (crossing orbit of subsystem i is inner?, band anchors)
# Bands grow from the anchored end of [0, 1] by eps: "low" anchors at 0,
# "high" anchors at 1.  The crossing orbit anchors band i; the orbit of
# subsystem j that the crossing exits through anchors band j.
_CASES = {
    "I.I": ("low", "high"),    # inner orbit of i exits beyond the outer orbit of j
    "I.II": ("low", "low"),    # inner orbit of i dips inside the inner orbit of j
    "II.I": ("high", "high"),  # outer orbit of i exits beyond the outer orbit of j
    "II.II": ("high", "low"),  # outer orbit of i dips inside the inner orbit of j
}


@dataclass
class RegionWitness:
    """Certified instance of the overlap condition with sample witnesses."""
    case: str                 # "I.I" | "I.II" | "II.I" | "II.II"
    i: int                    # index of the subsystem whose orbit crosses
    j: int
    point_in: np.ndarray      # on the crossing orbit, strictly inside annulus j
    point_out: np.ndarray     # on the crossing orbit, strictly outside annulus j
    point_boundary: np.ndarray  # near the corner where the crossing orbit meets
    margin: float             # min classification margin (coordinate space)
    summary: dict = field(default_factory=dict)

    def to_dict(self):
        return {"case": self.case, "i": self.i, "j": self.j,
                "point_in": list(map(float, self.point_in)),
                "point_out": list(map(float, self.point_out)),
                "point_boundary": list(map(float, self.point_boundary)),
                "margin": self.margin, "summary": self.summary}


@dataclass
class QuadArc:
    points: np.ndarray        # polyline including both vertices
    subsystem: int            # 1 or 2
    coordinate: float         # orbit-coordinate value of the carrying orbit


@dataclass
class Quadrilateral:
    """Region bounded by four orbit arcs, two per subsystem, alternating."""
    arcs: list                # four QuadArc, cyclic, alternating subsystems
    vertices: dict            # labels A, B, C, D -> (2,) points
    case: str
    eps1: float
    eps2: float
    band1: tuple              # (c~_1, C~_1) coordinate values, subsystem 1
    band2: tuple
    ring: np.ndarray          # closed boundary polyline
    interior_margin: float = None

    def polygon(self):
        return Polygon(self.ring)

    def to_dict(self):
        return {"case": self.case, "eps1": self.eps1, "eps2": self.eps2,
                "band1": list(self.band1), "band2": list(self.band2),
                "vertices": {k: list(map(float, v))
                             for k, v in self.vertices.items()},
                "arc_tags": [(a.subsystem, a.coordinate) for a in self.arcs],
                "interior_margin": self.interior_margin}

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def arcs_to_csv(self, path_prefix):
        for k, arc in enumerate(self.arcs, 1):
            np.savetxt(f"{path_prefix}_arc{k}.csv", arc.points, delimiter=",",
                       header="x,y", comments="")


def _ring(orbit, n):
    pts = orbit.resample(n) if orbit.traj is not None else orbit.points
    return pts[:-1]


def check_condition_i(a1, a2, n_samples=2048, membership_tol=MEMBERSHIP_TOL):
    """Locate a boundary orbit of one annulus crossing the other transversally.

    Samples each boundary orbit of each annulus, classifies the samples by the
    other annulus's orbit coordinate, and returns the satisfied case with the
    best classification margin.  Raises ConditionFails when no boundary orbit
    both enters the other open annulus and leaves its closure.
    """
    annuli = {1: a1, 2: a2}
    candidates = []
    summary = {}
    for i, j in ((1, 2), (2, 1)):
        for case_side, orbit in (("I", annuli[i].inner), ("II", annuli[i].outer)):
            samples = _ring(orbit, n_samples)
            c = annuli[j].coordinate_batch(samples)
            in_margin = np.minimum(c, 1.0 - c)        # >0 strictly inside annulus j
            k_in = int(np.argmax(in_margin))
            key = f"{'gamma' if case_side == 'I' else 'Gamma'}{i}"
            summary[key] = {"inside_inner": int(np.sum(c < -membership_tol)),
                            "in_annulus": int(np.sum(in_margin > membership_tol)),
                            "outside_outer": int(np.sum(c > 1 + membership_tol))}
            if in_margin[k_in] <= membership_tol:
                continue
            for subcase, out_margin in (("I", c - 1.0), ("II", -c)):
                k_out = int(np.argmax(out_margin))
                if out_margin[k_out] <= membership_tol:
                    continue
                tag = f"{case_side}.{subcase}"
                margin = min(float(in_margin[k_in]), float(out_margin[k_out]))
                # corner estimate: boundary crossing between the two witnesses
                lo, hi = sorted((k_in, k_out))
                level = 1.0 if subcase == "I" else 0.0
                seg = np.arange(lo, hi + 1)
                cross = np.nonzero(np.diff(np.sign(c[seg] - level)))[0]
                kb = seg[cross[0]] if len(cross) else k_in
                candidates.append(RegionWitness(
                    case=tag, i=i, j=j, point_in=samples[k_in].copy(),
                    point_out=samples[k_out].copy(),
                    point_boundary=samples[kb].copy(), margin=margin))
    if not candidates:
        raise ConditionFails(json.dumps(summary))
    best = max(candidates, key=lambda w: w.margin)
    best.summary = summary
    return best


def curve_intersections(p1, p2, merge_tol=1e-9):
    """Transversal intersection points of two simple polylines."""
    g1, g2 = LineString(np.asarray(p1)), LineString(np.asarray(p2))
    inter = g1.intersection(g2)
    if inter.is_empty:
        return []
    if inter.length > 0:
        raise DegenerateOverlap()
    geoms = getattr(inter, "geoms", [inter])
    pts = []
    for g in geoms:
        if g.geom_type != "Point":
            raise DegenerateOverlap()
        p = np.array([g.x, g.y])
        if all(np.hypot(*(p - q)) > merge_tol for q in pts):
            pts.append(p)
    return pts


def _band_polygon(annulus, lo, hi, n_ring, cache):
    def orbit_ring(c):
        if c not in cache:
            if c == 0.0:
                orb = annulus.inner
            elif c == 1.0:
                orb = annulus.outer
            else:
                orb = orbit_from_coordinate(annulus, c)
            cache[c] = _ring(orb, n_ring)
        return cache[c]

    return Polygon(orbit_ring(hi)).difference(Polygon(orbit_ring(lo)))


def _cyclic_runs(tags):
    """Run-length segments of a cyclic tag sequence: list of (tag, indices)."""
    n = len(tags)
    breaks = [k for k in range(n) if tags[k] != tags[k - 1]]
    if not breaks:
        return [(tags[0], list(range(n)))]
    runs = []
    for a, b in zip(breaks, breaks[1:] + [breaks[0] + n]):
        runs.append((tags[a], [k % n for k in range(a, b)]))
    return runs


def build_quadrilateral(a1, a2, witness, n_ring=8192, eps_min=1e-6,
                        membership_tol=MEMBERSHIP_TOL, n_interior=64, rng=None):
    """Construct the quadrilateral for a certified overlap witness.

    The bands of the two annuli grow from the ends anchored by the witness
    case; the shrink parameters start at the full coordinate span (matching
    the boundary-orbit quadrilateral when it exists) and halve until the band
    intersection component near the witness decomposes into exactly four
    alternating orbit arcs.  Raises EpsilonUnderflow below ``eps_min``.
    """
    annuli = {1: a1, 2: a2}
    side_i, side_j = _CASES[witness.case]
    i, j = witness.i, witness.j
    sides = {i: side_i, j: side_j}
    caches = {1: {}, 2: {}}

    eps = 1.0
    last_error = "no band intersection"
    while eps >= eps_min:
        bands = {}
        for k in (1, 2):
            bands[k] = (0.0, eps) if sides[k] == "low" else (1.0 - eps, 1.0)
        try:
            quad = _try_build(annuli, bands, witness, n_ring, caches,
                              membership_tol, n_interior, rng)
        except _BuildFailed as exc:
            last_error = str(exc)
            quad = None
        if quad is not None:
            quad.eps1, quad.eps2 = eps, eps
            return quad
        eps *= 0.5
    raise EpsilonUnderflow(eps_min)


class _BuildFailed(Exception):
    pass


def _try_build(annuli, bands, witness, n_ring, caches, membership_tol,
               n_interior, rng):
    poly1 = _band_polygon(annuli[1], *bands[1], n_ring, caches[1])
    poly2 = _band_polygon(annuli[2], *bands[2], n_ring, caches[2])
    inter = poly1.intersection(poly2)
    # split components that touch only at a point (tangency pinch): a tiny
    # erode-dilate cycle severs zero-width necks without moving the boundary
    # beyond ~1e-10
    if not inter.is_empty:
        xmin, ymin, xmax, ymax = inter.bounds
        pinch = 1e-10 * max(1.0, xmax - xmin, ymax - ymin)
        inter = inter.buffer(-pinch).buffer(pinch)
    comps = [g for g in getattr(inter, "geoms", [inter])
             if isinstance(g, Polygon) and g.area > 0]
    if not comps:
        raise _BuildFailed("empty band intersection")
    anchor = Point(witness.point_in)
    comp = min(comps, key=lambda g: g.distance(anchor))
    if comp.interiors:
        raise _BuildFailed("band intersection component has holes")

    ring = np.asarray(comp.exterior.coords)[:-1]
    if not Polygon(ring).exterior.is_ccw:
        ring = ring[::-1]
    e = {k: annuli[k].coordinate_batch(ring) for k in (1, 2)}
    res = {k: np.minimum(np.abs(e[k] - bands[k][0]), np.abs(e[k] - bands[k][1]))
           for k in (1, 2)}
    tags = np.where(res[1] <= res[2], 1, 2)

    runs = _cyclic_runs(list(tags))
    min_run = max(3, len(ring) // 2000)
    for _ in range(8):
        if len(runs) <= 4:
            break
        shortest = min(runs, key=lambda r: len(r[1]))
        if len(shortest[1]) > min_run:
            break
        for k in shortest[1]:
            tags[k] = 3 - tags[k]
        runs = _cyclic_runs(list(tags))
    if len(runs) != 4 or any(runs[k][0] == runs[(k + 1) % 4][0] for k in range(4)):
        raise _BuildFailed(f"boundary decomposes into {len(runs)} runs, need 4 "
                           "alternating")

    arcs = []
    for tag, idx in runs:
        vals = e[tag][idx]
        lo, hi = bands[tag]
        value = lo if abs(np.median(vals) - lo) < abs(np.median(vals) - hi) else hi
        arcs.append(QuadArc(points=ring[idx], subsystem=int(tag),
                            coordinate=float(value)))

    # vertices between consecutive arcs, polished onto both carrying orbits
    verts = []
    for k in range(4):
        a, b = arcs[k], arcs[(k + 1) % 4]
        p0 = 0.5 * (a.points[-1] + b.points[0])
        verts.append(_refine_vertex(annuli, a, b, p0))

    # strict interior containment in both open annuli
    margin = _interior_margin(annuli, comp, n_interior, rng)
    if margin <= 0:
        raise _BuildFailed("interior point escapes the open annuli")

    # label vertices: the witness-case corner is C; continue CCW as C, B, A, D
    i, j = witness.i, witness.j
    side_i, side_j = _CASES[witness.case]
    val_i = bands[i][0] if side_i == "low" else bands[i][1]
    val_j = bands[j][0] if side_j == "low" else bands[j][1]

    def corner_score(k):
        pair = {(arcs[k].subsystem, arcs[k].coordinate),
                (arcs[(k + 1) % 4].subsystem, arcs[(k + 1) % 4].coordinate)}
        return pair == {(i, val_i), (j, val_j)}

    c_idx = next((k for k in range(4) if corner_score(k)), None)
    if c_idx is None:
        c_idx = int(np.argmin([np.hypot(*(v - witness.point_boundary))
                               for v in verts]))
    # D is the far endpoint of the crossing subsystem's primal arc, B the far
    # endpoint of the other primal arc, A the remaining vertex
    vertices = {"C": verts[c_idx]}
    arc_lo = arcs[c_idx]
    far = {c_idx: (c_idx - 1) % 4, (c_idx + 1) % 4: (c_idx + 1) % 4}
    if (arc_lo.subsystem, arc_lo.coordinate) == (i, val_i):
        vertices["D"] = verts[far[c_idx]]
        vertices["B"] = verts[far[(c_idx + 1) % 4]]
    else:
        vertices["B"] = verts[far[c_idx]]
        vertices["D"] = verts[far[(c_idx + 1) % 4]]
    used = {c_idx, (c_idx - 1) % 4, (c_idx + 1) % 4}
    vertices["A"] = verts[({0, 1, 2, 3} - used).pop()]

    # stitch polished vertices into the arc polylines
    for k in range(4):
        arcs[k].points = np.vstack([verts[k - 1], arcs[k].points, verts[k]])

    quad = Quadrilateral(arcs=arcs, vertices=vertices, case=witness.case,
                         eps1=1.0, eps2=1.0,
                         band1=bands[1], band2=bands[2], ring=ring,
                         interior_margin=float(margin))
    return quad


def _refine_vertex(annuli, arc_a, arc_b, p0, max_iter=8, tol=1e-12):
    """Newton polish of an arc junction onto the two carrying orbit levels."""
    targets = [(arc_a.subsystem, arc_a.coordinate),
               (arc_b.subsystem, arc_b.coordinate)]
    if targets[0][0] == targets[1][0]:
        return p0
    p0 = np.asarray(p0, dtype=float)
    p = p0.copy()
    h = 1e-6 * max(1.0, np.hypot(*p))
    best_p, best_res = p0, np.inf
    for _ in range(max_iter):
        probes = np.array([p, p + (h, 0), p - (h, 0), p + (0, h), p - (0, h)])
        F = np.empty(2)
        J = np.empty((2, 2))
        for m, (sub, val) in enumerate(targets):
            cv = annuli[sub].coordinate_batch(probes)
            F[m] = cv[0] - val
            J[m] = [(cv[1] - cv[2]) / (2 * h), (cv[3] - cv[4]) / (2 * h)]
        res = float(np.hypot(*F))
        if res < best_res:
            best_p, best_res = p.copy(), res
        if res < tol:
            break
        try:
            step = np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        p = p - step
    # accept only a genuinely converged polish; tangential corners (singular
    # Jacobian) keep the ring junction point
    return best_p if best_res < 1e-8 else p0


def _interior_margin(annuli, comp, n_interior, rng):
    rng = np.random.default_rng(rng if rng is not None else 0)
    minx, miny, maxx, maxy = comp.bounds
    pts = []
    from shapely import contains_xy
    for _ in range(200):
        cand = rng.uniform((minx, miny), (maxx, maxy), size=(4 * n_interior, 2))
        keep = contains_xy(comp, cand[:, 0], cand[:, 1])
        pts.extend(cand[keep])
        if len(pts) >= n_interior:
            break
    pts = np.asarray(pts[:n_interior])
    if len(pts) == 0:
        return -1.0
    m = np.inf
    for k in (1, 2):
        c = annuli[k].coordinate_batch(pts)
        m = min(m, float(np.min(np.minimum(c, 1.0 - c))))
    return m
