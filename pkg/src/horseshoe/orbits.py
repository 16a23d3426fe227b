"""Closed-orbit families of planar subsystems.

A subsystem is a planar field with a center surrounded by nested periodic
orbits.  This module measures minimal periods and enclosed areas, builds the
annulus between two chosen orbits, and realizes the normalized orbit
coordinate: area-based for general fields, energy-based for (Newtonian)
Hamiltonian ones.  A sampled "chart" of the family supports fast vectorized
coordinate queries and point reconstruction, which the geometry and switching
layers lean on heavily.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from shapely.geometry import LineString, Point, Polygon

from . import expr as ex
from .errors import (
    HypothesisViolated,
    NoBracket,
    NotInRegion,
    NotPeriodic,
    ReturnedToWrongPoint,
    SelfIntersecting,
)
from .ode import DEFAULT_ATOL, DEFAULT_RTOL, EventSpec, FieldFn, integrate, integrate_until_event

CLOSURE_TOL = 1e-7
AREA_TOL = 1e-9  # relative
CENTER_TOL = 1e-10


# --- subsystems --------------------------------------------------------------

@dataclass
class SubsystemSpec:
    """One autonomous planar subsystem with a center inside a family of orbits.

    kind: "general" (two field components), "hamiltonian" (H(x, y) with
    symbolic gradient), or "newtonian" (second-order x'' + g(x) = 0).
    """
    kind: str
    field: FieldFn
    center: np.ndarray
    label: str = "1"
    h_expr: ex.Expr = None          # hamiltonian: H(x,y)
    g_expr: ex.Expr = None          # newtonian: g(x)
    g_prime: ex.Expr = None
    g_prime2: ex.Expr = None
    _energy_fn: callable = None     # vectorized (x, y) -> energy
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL

    @property
    def has_energy(self):
        return self._energy_fn is not None

    def energy(self, p):
        """First-integral value at a point (hamiltonian/newtonian only)."""
        if self._energy_fn is None:
            raise ValueError(f"subsystem {self.label} has no first integral")
        p = np.asarray(p, dtype=float)
        return self._energy_fn(p[..., 0], p[..., 1])


def _to_callable(f):
    if isinstance(f, str):
        f = ex.parse(f)
    if isinstance(f, ex.Expr):
        return ex.compile_numpy(f), f
    return f, None


def general_subsystem(fx, fy, center_estimate, label="1",
                      rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, refine_center=True,
                      energy=None):
    """Build a general subsystem from two field components.

    fx, fy may be expression strings, Expr ASTs, or vectorized callables.
    The center estimate is refined by a damped Newton iteration on the field.
    ``energy`` optionally supplies a known first integral (expression or
    callable); orbit coordinates then become exact instead of chart-based.
    """
    fx_fn, _ = _to_callable(fx)
    fy_fn, _ = _to_callable(fy)

    def fn(x, y):
        return fx_fn(x, y), fy_fn(x, y)

    center = np.asarray(center_estimate, dtype=float)
    if refine_center:
        center = _newton_center_2d(fn, center)
    h_fn, h_ast = (None, None) if energy is None else _to_callable(energy)
    return SubsystemSpec(kind="general", field=FieldFn(fn, label=f"f{label}"),
                         center=center, label=label, h_expr=h_ast,
                         _energy_fn=h_fn, rtol=rtol, atol=atol)


def hamiltonian_subsystem(h, center_estimate, label="1",
                          rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Build a Hamiltonian subsystem x' = H_y, y' = -H_x from H(x, y).

    The center estimate is refined to a critical point of H; the point must be
    a nondegenerate extremum (definite Hessian), otherwise it is not a center.
    """
    h_ast = ex.parse(h) if isinstance(h, str) else h
    hx = ex.differentiate(h_ast, "x")
    hy = ex.differentiate(h_ast, "y")
    hxx = ex.compile_numpy(ex.differentiate(hx, "x"))
    hxy = ex.compile_numpy(ex.differentiate(hx, "y"))
    hyy = ex.compile_numpy(ex.differentiate(hy, "y"))
    hx_fn, hy_fn = ex.compile_numpy(hx), ex.compile_numpy(hy)

    def fn(x, y):
        return hy_fn(x, y), -hx_fn(x, y)

    def grad(x, y):
        return hx_fn(x, y), hy_fn(x, y)

    center = _newton_center_2d(
        grad, np.asarray(center_estimate, dtype=float),
        jac=lambda x, y: np.array([[hxx(x, y), hxy(x, y)], [hxy(x, y), hyy(x, y)]]))
    hess = np.array([[hxx(*center), hxy(*center)], [hxy(*center), hyy(*center)]])
    det = np.linalg.det(hess)
    if not (np.hypot(hx_fn(*center), hy_fn(*center)) < 1e-8 and det > 0):
        raise HypothesisViolated(
            "nondegenerate center", f"gradient/Hessian check failed at {center}")
    return SubsystemSpec(kind="hamiltonian", field=FieldFn(fn, label=f"H{label}"),
                         center=center, label=label, h_expr=h_ast,
                         _energy_fn=ex.compile_numpy(h_ast), rtol=rtol, atol=atol)


def newtonian_subsystem(g, center_x_estimate=0.0, label="1",
                        rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Build the Newtonian subsystem x' = y, y' = -g(x) from a restoring force g.

    The center abscissa is refined by 1-D Newton on g using the symbolic
    derivative; requires g(x_c) = 0 within tolerance and g'(x_c) > 0.
    """
    g_ast = ex.parse(g) if isinstance(g, str) else g
    gp = ex.differentiate(g_ast, "x")
    gpp = ex.differentiate(gp, "x")
    g_fn = ex.compile_numpy(g_ast)
    gp_fn = ex.compile_numpy(gp)

    xc = float(center_x_estimate)
    for _ in range(60):
        gv = g_fn(xc, 0.0)
        if abs(gv) < CENTER_TOL:
            break
        dv = gp_fn(xc, 0.0)
        if dv == 0:
            raise HypothesisViolated("g'(x_c) != 0", f"Newton stalled at x={xc}")
        xc -= gv / dv
    if abs(g_fn(xc, 0.0)) > CENTER_TOL:
        raise HypothesisViolated("g(x_c) = 0", f"residual {g_fn(xc, 0.0):.3e} at x={xc}")
    if gp_fn(xc, 0.0) <= 0:
        raise HypothesisViolated("g'(x_c) > 0", f"g'({xc}) = {gp_fn(xc, 0.0):.3e}")

    def fn(x, y):
        return y + 0.0 * x, -g_fn(x, y)

    spec = SubsystemSpec(kind="newtonian", field=FieldFn(fn, label=f"g{label}"),
                         center=np.array([xc, 0.0]), label=label,
                         g_expr=g_ast, g_prime=gp, g_prime2=gpp,
                         rtol=rtol, atol=atol)
    spec._energy_fn = _newtonian_energy_fn(g_fn, xc)
    return spec


def _newtonian_energy_fn(g_fn, xc, halfwidth=30.0, n=8193):
    """E(x, y) = y^2/2 + G(x) with G from a spline antiderivative of g.

    The spline covers [xc - halfwidth, xc + halfwidth] at spacing fine enough
    that its quadrature error is far below the tolerances used downstream.
    """
    xs = np.linspace(xc - halfwidth, xc + halfwidth, n)
    spline = CubicSpline(xs, g_fn(xs, 0.0)).antiderivative()
    g0 = float(spline(xc))

    def energy(x, y):
        return 0.5 * np.asarray(y) ** 2 + (spline(x) - g0)

    return energy


def _newton_center_2d(fn, p0, jac=None, tol=1e-13, max_iter=60):
    p = np.asarray(p0, dtype=float).copy()
    for _ in range(max_iter):
        fx, fy = fn(p[0], p[1])
        r = np.array([float(fx), float(fy)])
        if np.hypot(*r) < tol:
            return p
        if jac is not None:
            J = jac(p[0], p[1])
        else:
            h = 1e-7 * max(1.0, np.hypot(*p))
            J = np.empty((2, 2))
            for k in range(2):
                dp = np.zeros(2)
                dp[k] = h
                fpx, fpy = fn(*(p + dp))
                fmx, fmy = fn(*(p - dp))
                J[0, k] = (fpx - fmx) / (2 * h)
                J[1, k] = (fpy - fmy) / (2 * h)
        try:
            step = np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            break
        p -= step
    return p


# --- closed orbits ------------------------------------------------------------

@dataclass
class ClosedOrbit:
    """A sampled periodic orbit: uniform-in-time polyline plus metadata."""
    points: np.ndarray            # (n+1, 2), first == last up to closure tol
    period: float
    seed: np.ndarray
    subsystem: SubsystemSpec = None
    area: float = None
    energy: float = None
    coordinate: float = None
    traj: object = None           # dense Trajectory over one period, if available

    @classmethod
    def from_polyline(cls, points, period=float("nan"), **kw):
        return cls(points=np.asarray(points, dtype=float), period=period,
                   seed=np.asarray(points[0], dtype=float), **kw)

    def resample(self, n):
        """n+1 uniform-in-time samples from the dense interpolant."""
        if self.traj is None:
            raise ValueError("orbit carries no dense trajectory")
        return self.traj.interpolate(np.linspace(0.0, self.period, n + 1))

    def is_closed(self, tol=CLOSURE_TOL):
        return float(np.hypot(*(self.points[0] - self.points[-1]))) <= tol * max(
            1.0, float(np.abs(self.points).max()))

    def is_simple(self):
        pts = self.points[:-1]
        if len(pts) < 3:
            return False
        return LineString(np.vstack([pts, pts[:1]])).is_simple

    def polygon(self):
        return Polygon(self.points[:-1])

    def to_csv(self, path):
        np.savetxt(path, self.points, delimiter=",", header="x,y", comments="")


def measure_period(sys, seed, n_samples=512, closure_tol=CLOSURE_TOL,
                   t_max=None, rtol=None, atol=None):
    """Minimal period of the closed orbit through ``seed``.

    The return section is the ray from the subsystem center through the seed;
    the first transversal crossing in the direction of the flow and on the
    seed's side of the center is the period.  Returns (period, ClosedOrbit).
    """
    rtol = sys.rtol if rtol is None else rtol
    atol = sys.atol if atol is None else atol
    seed = np.asarray(seed, dtype=float)
    r = seed - sys.center
    dist = float(np.hypot(*r))
    if dist == 0.0:
        raise NotPeriodic(0.0)
    u = r / dist
    fx, fy = sys.field(seed[0], seed[1])
    swirl = r[0] * float(fy) - r[1] * float(fx)
    if swirl == 0.0:
        raise NotPeriodic(0.0)
    # crude angular speed estimate fixes the time scales
    t_est = 2.0 * math.pi * dist * dist / abs(swirl)
    if t_max is None:
        t_max = 12.0 * t_est
    cx, cy = sys.center

    def h(x, y):
        return u[0] * (y - cy) - u[1] * (x - cx)

    def guard(x, y):
        return u[0] * (x - cx) + u[1] * (y - cy)

    event = EventSpec(h=h, direction="rising" if swirl > 0 else "falling",
                      count=1, guard=guard)
    try:
        t_ret, state, _ = integrate_until_event(
            sys.field, seed, event, t_max, rtol=rtol, atol=atol,
            t_min=1e-6 * t_est)
    except Exception as exc:
        if isinstance(exc, (ReturnedToWrongPoint,)):
            raise
        raise NotPeriodic(t_max) from exc
    miss = float(np.hypot(*(state - seed)))
    if miss > closure_tol * max(1.0, dist):
        raise ReturnedToWrongPoint(miss, closure_tol)

    period = float(t_ret)
    traj = integrate(sys.field, seed, period, rtol=rtol, atol=atol,
                     t_eval=np.linspace(0.0, period, n_samples + 1), dense=True)
    points = traj.states.copy()
    points[-1] = points[0]  # close exactly; the defect is below closure_tol
    orbit = ClosedOrbit(points=points, period=period, seed=seed, subsystem=sys,
                        traj=traj,
                        energy=float(sys.energy(seed)) if sys.has_energy else None)
    orbit.area = enclosed_area(orbit)
    return period, orbit


def polygon_area(points):
    """Signed shoelace area of a closed polyline (first point may repeat)."""
    p = np.asarray(points, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def enclosed_area(orbit, area_tol=AREA_TOL):
    """Positive area enclosed by a closed simple orbit.

    Uses the Green's-theorem time integral (1/2)|oint (x dy - y dx)| evaluated
    by the trapezoid rule on uniform-in-time samples (spectrally accurate for
    smooth periodic integrands), doubling the sampling until two refinements
    agree within ``area_tol`` relative.  Falls back to the shoelace formula
    for bare polylines without a dense trajectory.
    """
    if not orbit.is_simple():
        raise SelfIntersecting()
    if orbit.traj is None or orbit.subsystem is None:
        return abs(polygon_area(orbit.points))

    sysf = orbit.subsystem.field
    period = orbit.period

    def green(n):
        t = np.linspace(0.0, period, n, endpoint=False)
        pts = orbit.traj.interpolate(t)
        vx, vy = sysf(pts[:, 0], pts[:, 1])
        integrand = 0.5 * (pts[:, 0] * vy - pts[:, 1] * vx)
        return abs(float(np.mean(integrand)) * period)

    n = max(len(orbit.points) - 1, 256)
    prev = green(n)
    for _ in range(8):
        n *= 2
        cur = green(n)
        if abs(cur - prev) <= area_tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    return prev


# --- annulus and the orbit coordinate ----------------------------------------

@dataclass
class AnnulusSpec:
    """Closed region between two nested orbits of one subsystem."""
    subsystem: SubsystemSpec
    inner: ClosedOrbit
    outer: ClosedOrbit
    ray: np.ndarray = None              # unit vector from center used as transversal
    chart_size: int = 33
    _chart: object = None

    def __post_init__(self):
        if self.ray is None:
            r = self.inner.seed - self.subsystem.center
            self.ray = r / np.hypot(*r)
        if not self.outer.polygon().contains(self.inner.polygon()):
            raise NoBracket("inner orbit is not strictly inside the outer orbit")
        if not self.s_area < self.S_area:
            raise NoBracket("enclosed areas are not increasing")

    @property
    def s_area(self):
        return self.inner.area

    @property
    def S_area(self):
        return self.outer.area

    @property
    def energy_bounds(self):
        if not self.subsystem.has_energy:
            return None
        return (self.inner.energy, self.outer.energy)

    @classmethod
    def from_seeds(cls, sys, seed_inner, seed_outer, **kw):
        _, inner = measure_period(sys, seed_inner)
        _, outer = measure_period(sys, seed_outer)
        return cls(subsystem=sys, inner=inner, outer=outer, **kw)

    def energy_to_coordinate(self, h):
        lo, hi = self.energy_bounds
        return (np.asarray(h) - lo) / (hi - lo)

    def coordinate_to_energy(self, c):
        lo, hi = self.energy_bounds
        return lo + np.asarray(c) * (hi - lo)

    def chart(self):
        """Sampled family chart (built lazily, cached)."""
        if self._chart is None:
            self._chart = OrbitChart(self, self.chart_size)
        return self._chart

    def coordinate_batch(self, points):
        """Fast vectorized orbit coordinate: exact via energy when available,
        otherwise interpolated through the chart."""
        points = np.asarray(points, dtype=float)
        if self.subsystem.has_energy:
            return self.energy_to_coordinate(self.subsystem.energy(points))
        return self.chart().coordinate(points)

    def period_at(self, c):
        """Interpolated minimal period at coordinate c (chart-backed)."""
        return self.chart().period_at(c)


class OrbitChart:
    """Sampled chart of the nested orbit family inside an annulus.

    Stores ~Chebyshev-spaced member orbits with their angular radius profiles
    about the center, coordinates, and periods.  Queries interpolate
    barycentrically across the family, which is spectrally accurate for
    analytic families.  Requires the family to be star-shaped about the
    center (checked during construction).
    """

    def __init__(self, annulus, n_orbits=33, n_angle=4096):
        self.annulus = annulus
        sys = annulus.subsystem
        self.center = sys.center
        theta0 = math.atan2(annulus.ray[1], annulus.ray[0])
        r_in = _radius_on_ray(annulus.inner, self.center, theta0)
        r_out = _radius_on_ray(annulus.outer, self.center, theta0)
        # Chebyshev-Lobatto nodes along the transversal ray, endpoints included
        k = np.arange(n_orbits)
        radii = r_in + (r_out - r_in) * 0.5 * (1 - np.cos(np.pi * k / (n_orbits - 1)))

        orbits = [annulus.inner]
        for r in radii[1:-1]:
            seed = self.center + r * annulus.ray
            _, orb = measure_period(sys, seed)
            orbits.append(orb)
        orbits.append(annulus.outer)

        self.orbits = orbits
        self.periods = np.array([o.period for o in orbits])
        s, S = annulus.s_area, annulus.S_area
        coords = np.array([(o.area - s) / (S - s) for o in orbits])
        coords[0], coords[-1] = 0.0, 1.0
        if np.any(np.diff(coords) <= 0):
            raise NoBracket("orbit areas are not monotone along the transversal ray")
        self.coords = coords
        self._bary_w = _bary_weights(coords)

        # angular radius tables r_k(theta), resampled densely from dense output
        self._theta_tables = []
        for o in orbits:
            pts = o.resample(n_angle) if o.traj is not None else o.points
            rel = pts[:-1] - self.center
            th = np.unwrap(np.arctan2(rel[:, 1], rel[:, 0]))
            dth = np.diff(th)
            if not (np.all(dth > 0) or np.all(dth < 0)):
                raise NoBracket("orbit is not star-shaped about the center; "
                                "chart construction failed")
            rr = np.hypot(rel[:, 0], rel[:, 1])
            order = np.argsort(np.mod(th, 2 * np.pi))
            th_s = np.mod(th, 2 * np.pi)[order]
            r_s = rr[order]
            # pad with the wrapped neighbours so plain (pre-sorted) interp
            # covers the seam at 0/2pi without re-sorting on every lookup
            th_ext = np.concatenate([[th_s[-1] - 2 * np.pi], th_s,
                                     [th_s[0] + 2 * np.pi]])
            r_ext = np.concatenate([[r_s[-1]], r_s, [r_s[0]]])
            self._theta_tables.append((th_ext, r_ext))

    def radius_table(self, theta):
        """Radii of all member orbits at polar angle(s) theta: shape (K, N)."""
        theta = np.mod(np.atleast_1d(np.asarray(theta, dtype=float)), 2 * np.pi)
        M = np.empty((len(self.orbits), len(theta)))
        for k, (th_s, r_s) in enumerate(self._theta_tables):
            M[k] = np.interp(theta, th_s, r_s)
        return M

    def coordinate(self, points):
        """Interpolated coordinate of points (N, 2) or (2,); extrapolates
        linearly just outside the family so classification margins keep
        their sign."""
        points = np.asarray(points, dtype=float)
        single = points.ndim == 1
        pts = points[None, :] if single else points
        rel = pts - self.center
        theta = np.arctan2(rel[:, 1], rel[:, 0])
        r = np.hypot(rel[:, 0], rel[:, 1])
        M = self.radius_table(theta)
        c = _bary_inverse_columns(M, self.coords, r)
        # linear extension outside the sampled band
        below = r < M[0]
        above = r > M[-1]
        if np.any(below):
            slope = (self.coords[1] - self.coords[0]) / (M[1][below] - M[0][below])
            c[below] = self.coords[0] + slope * (r[below] - M[0][below])
        if np.any(above):
            slope = (self.coords[-1] - self.coords[-2]) / (M[-1][above] - M[-2][above])
            c[above] = self.coords[-1] + slope * (r[above] - M[-1][above])
        return c[0] if single else c

    def point(self, c, theta):
        """Point of the family at coordinate c and polar angle theta."""
        c = np.atleast_1d(np.asarray(c, dtype=float))
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        c, theta = np.broadcast_arrays(c, theta)
        M = self.radius_table(theta)
        r = _bary_eval(self.coords, M, self._bary_w, c)
        r = np.atleast_1d(r)
        pts = self.center + np.column_stack([r * np.cos(theta), r * np.sin(theta)])
        return pts[0] if c.size == 1 else pts

    def radius_at(self, c, theta):
        M = self.radius_table(theta)
        return _bary_eval(self.coords, M, self._bary_w, np.asarray(c, dtype=float))

    def period_at(self, c):
        """Barycentric interpolation of the family's period function."""
        return _bary_eval(self.coords, self.periods[:, None], self._bary_w,
                          np.asarray(c, dtype=float))


def _radius_on_ray(orbit, center, theta):
    rel = orbit.points[:-1] - center
    th = np.mod(np.arctan2(rel[:, 1], rel[:, 0]), 2 * np.pi)
    rr = np.hypot(rel[:, 0], rel[:, 1])
    order = np.argsort(th)
    return float(np.interp(np.mod(theta, 2 * np.pi), th[order], rr[order],
                           period=2 * np.pi))


def _bary_weights(nodes):
    nodes = np.asarray(nodes, dtype=float)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    logs = np.sum(np.log(np.abs(diff)), axis=1)
    signs = np.prod(np.sign(diff), axis=1)
    w = signs * np.exp(-(logs - logs.mean()))
    return w


def _bary_eval(nodes, values, w, t):
    """Barycentric interpolation; values shape (K, N), t scalar or (N,) or (M,)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    K, N = values.shape
    if t.shape[0] not in (1, N) and N == 1:
        values = np.broadcast_to(values, (K, t.shape[0]))
        N = t.shape[0]
    d = t[None, :] - nodes[:, None]          # (K, N)
    exact = np.isclose(d, 0.0, atol=1e-15)
    d = np.where(exact, 1.0, d)
    wd = w[:, None] / d
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sum(wd * values, axis=0) / np.sum(wd, axis=0)
    hit_cols = exact.any(axis=0) | ~np.isfinite(out)
    if np.any(hit_cols):
        idx = np.argmin(np.abs(t[None, :] - nodes[:, None]), axis=0)
        cols = np.nonzero(hit_cols)[0]
        out[cols] = values[idx[cols], cols]
    return out if out.shape[0] > 1 else float(out[0])


def _bary_inverse_columns(nodes_cols, values, t):
    """Per-column barycentric interpolation: column q interpolates the map
    nodes_cols[:, q] -> values and evaluates at t[q]."""
    K, N = nodes_cols.shape
    diff = nodes_cols[:, None, :] - nodes_cols[None, :, :]     # (K, K, N)
    eye = np.eye(K, dtype=bool)[:, :, None]
    diff = np.where(eye, 1.0, diff)
    logs = np.sum(np.log(np.abs(diff)), axis=1)
    signs = np.prod(np.sign(np.where(eye, 1.0, diff)), axis=1)
    w = signs * np.exp(-(logs - logs.mean(axis=0, keepdims=True)))  # (K, N)
    d = t[None, :] - nodes_cols
    exact = np.isclose(d, 0.0, atol=1e-15)
    d = np.where(exact, 1.0, d)
    wd = w / d
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sum(wd * values[:, None], axis=0) / np.sum(wd, axis=0)
    hit_cols = exact.any(axis=0) | ~np.isfinite(out)
    if np.any(hit_cols):
        idx = np.argmin(np.abs(t[None, :] - nodes_cols), axis=0)
        out[hit_cols] = values[idx[hit_cols]]
    return out


# --- coordinate operations ----------------------------------------------------

def orbit_from_coordinate(annulus, c, area_tol=AREA_TOL, max_refine=6):
    """Closed orbit at normalized coordinate c in [0, 1].

    Energy systems solve for the target level along the transversal ray;
    general systems invert the chart estimate and polish with a secant
    iteration on the measured enclosed area.
    """
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"coordinate {c} outside [0, 1]")
    sys = annulus.subsystem
    if c == 0.0:
        return annulus.inner
    if c == 1.0:
        return annulus.outer
    theta0 = math.atan2(annulus.ray[1], annulus.ray[0])

    if sys.has_energy:
        target_h = float(annulus.coordinate_to_energy(c))
        r_in = _radius_on_ray(annulus.inner, sys.center, theta0)
        r_out = _radius_on_ray(annulus.outer, sys.center, theta0)

        def f(r):
            p = sys.center + r * annulus.ray
            return float(sys.energy(p)) - target_h

        r_star = brentq(f, r_in, r_out, xtol=1e-14)
        _, orbit = measure_period(sys, sys.center + r_star * annulus.ray)
        orbit.coordinate = c
        return orbit

    chart = annulus.chart()
    s, S = annulus.s_area, annulus.S_area
    target = s + c * (S - s)
    r = float(chart.radius_at(c, theta0))
    r_prev, a_prev = None, None
    orbit = None
    for _ in range(max_refine):
        _, orbit = measure_period(sys, sys.center + r * annulus.ray)
        a = orbit.area
        if abs(a - target) <= area_tol * max(1.0, target):
            break
        if r_prev is None:
            # local slope from the chart for the first correction
            slope = (float(chart.radius_at(min(c + 1e-4, 1.0), theta0))
                     - float(chart.radius_at(max(c - 1e-4, 0.0), theta0))) / 2e-4
            dA_dr = (S - s) / max(slope, 1e-12)
            r_new = r - (a - target) / dA_dr
        else:
            r_new = r - (a - target) * (r - r_prev) / (a - a_prev)
        r_prev, a_prev = r, a
        r = r_new
    if abs(orbit.area - target) > 1e3 * area_tol * max(1.0, target):
        raise NoBracket(f"area refinement stalled at {orbit.area} (target {target})")
    orbit.coordinate = c
    return orbit


def coordinate_of_point(annulus, p, area_tol=AREA_TOL):
    """Orbit coordinate of a point: negative inside the inner orbit, [0, 1] in
    the closed annulus; points outside the outer orbit raise NotInRegion."""
    p = np.asarray(p, dtype=float)
    sys = annulus.subsystem
    if sys.has_energy:
        c = float(annulus.energy_to_coordinate(sys.energy(p)))
        if c > 1.0 + 1e-9:
            raise NotInRegion(tuple(p))
        return c
    outer_poly = annulus.outer.polygon()
    if not outer_poly.buffer(1e-9 * max(1.0, outer_poly.length)).contains(Point(p)):
        raise NotInRegion(tuple(p))
    _, orbit = measure_period(sys, p)
    s, S = annulus.s_area, annulus.S_area
    return (orbit.area - s) / (S - s)


@dataclass
class ProfilePoint:
    c: float
    period: float
    area: float
    energy: float = None


def period_profile(annulus, n_grid, jobs=1):
    """Period function sampled on a Chebyshev grid over the open interval (0, 1).

    Each entry comes from a full orbit measurement at the inverted coordinate,
    not from chart interpolation.
    """
    if n_grid < 3:
        raise ValueError("n_grid must be >= 3")
    j = np.arange(1, n_grid + 1)
    cs = 0.5 * (1.0 - np.cos((2 * j - 1) * np.pi / (2 * n_grid)))

    def one(c):
        orbit = orbit_from_coordinate(annulus, float(c))
        return ProfilePoint(c=float(c), period=orbit.period, area=orbit.area,
                            energy=orbit.energy)

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, cs))
    return [one(c) for c in cs]


def profile_to_csv(profile, path):
    rows = [(p.c, p.energy if p.energy is not None else float("nan"),
             p.period, p.area) for p in profile]
    np.savetxt(path, np.array(rows), delimiter=",",
               header="c,h,period,area", comments="")
