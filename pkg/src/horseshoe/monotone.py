"""Monotonicity certificates for the period function of an orbit family.

Two routes are provided and deliberately kept independent: a numeric
certificate from a Chebyshev sample of the period profile, and an analytic
criterion for Newtonian systems x'' + g(x) = 0 based on the sign of

    H(x) = g(x)^2 - g''(x) g(x)^3 / (3 g'(x_c)^2) - 2 G(x) g'(x),

which decides the sign of T'(h) on an energy interval when it holds one sign
away from the center: H > 0 gives a strictly increasing period, H < 0 a
strictly decreasing one, and H identically zero the isochronous case.  (A
local expansion for g = x + eps x^3 gives H = -3.5 eps x^4 + O(x^6), matching
the hardening/softening dichotomy; the sign of the cubic correction term is
fixed by that expansion and cross-checked against brute-force period profiles
in the test suite.)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from . import expr as ex
from .errors import HypothesisViolated, NoBracket, NoConvergence
from .orbits import _bary_weights, period_profile

SIGN_TOL = 1e-9      # on the dimensionless normalized slope
PERIOD_TOL = 1e-8    # relative period spread for the isochronous verdict


@dataclass
class MonotonicityCertificate:
    """Outcome of a monotonicity check of T over the orbit coordinate.

    verdict: "increasing" | "decreasing" | "isochronous" | "inconclusive".
    margin is the smallest normalized |slope| (numeric) or the smallest
    |H| away from the center relative to max |H| (analytic).
    """
    method: str
    verdict: str
    margin: float
    n_grid: int
    details: dict = field(default_factory=dict)

    @property
    def monotone(self):
        return self.verdict in ("increasing", "decreasing")

    def to_dict(self):
        return {"method": self.method, "verdict": self.verdict,
                "margin": self.margin, "n_grid": self.n_grid,
                "details": self.details}


def _diff_matrix(nodes):
    """Barycentric spectral differentiation matrix on arbitrary nodes."""
    w = _bary_weights(nodes)
    n = len(nodes)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = (w[j] / w[i]) / (nodes[i] - nodes[j])
        D[i, i] = -np.sum(D[i])
    return D


def certify_numeric(annulus, n_grid=17, sign_tol=SIGN_TOL,
                    period_tol=PERIOD_TOL, jobs=1, profile=None):
    """Numeric monotonicity certificate from measured periods.

    Samples T at Chebyshev coordinates, differentiates the interpolant
    spectrally at the nodes, and classifies by the normalized slope
    T'(c) / mean(T).  Slopes that never clear ``sign_tol`` combined with a
    flat profile (relative spread below ``period_tol``) give the
    "isochronous" verdict; sign changes give "inconclusive".
    """
    if profile is None:
        profile = period_profile(annulus, n_grid, jobs=jobs)
    cs = np.array([p.c for p in profile])
    Ts = np.array([p.period for p in profile])
    slopes = _diff_matrix(cs) @ Ts
    mean_T = float(np.mean(Ts))
    normalized = slopes / mean_T
    spread = float((Ts.max() - Ts.min()) / mean_T)
    details = {"coords": cs.tolist(), "periods": Ts.tolist(),
               "normalized_slopes": normalized.tolist(),
               "relative_spread": spread}
    if np.all(normalized > sign_tol):
        verdict, margin = "increasing", float(normalized.min())
    elif np.all(normalized < -sign_tol):
        verdict, margin = "decreasing", float(-normalized.max())
    elif np.all(np.abs(normalized) <= sign_tol) and spread <= period_tol:
        verdict, margin = "isochronous", float(np.abs(normalized).max())
    else:
        verdict, margin = "inconclusive", 0.0
    return MonotonicityCertificate(method="numeric", verdict=verdict,
                                   margin=margin, n_grid=len(cs),
                                   details=details)


def chow_wang_H(sys, x, quad_tol=1e-12):
    """Evaluate H at abscissae x for a Newtonian subsystem.

    G is the antiderivative of g from the center, computed by adaptive
    quadrature; g' and g'' come from the exact symbolic derivatives.
    """
    if sys.kind != "newtonian":
        raise ValueError("analytic criterion requires a Newtonian subsystem")
    g = ex.compile_numpy(sys.g_expr)
    gp = ex.compile_numpy(sys.g_prime)
    gpp = ex.compile_numpy(sys.g_prime2)
    xc = float(sys.center[0])
    gp_c = float(gp(xc, 0.0))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    G = np.empty_like(x)
    for k, xk in enumerate(x):
        val, err = quad(lambda s: g(s, 0.0), xc, xk, epsabs=quad_tol,
                        epsrel=quad_tol, limit=200)
        if err > 1e3 * max(quad_tol, quad_tol * abs(val)):
            raise NoConvergence(err)
        G[k] = val
    gv = g(x, 0.0) + 0.0 * x
    H = gv ** 2 - gpp(x, 0.0) * gv ** 3 / (3.0 * gp_c ** 2) - 2.0 * G * gp(x, 0.0)
    return H if H.shape[0] > 1 else float(H[0])


def energy_interval(sys, h, x_max_scan=50.0):
    """Abscissa interval [alpha, beta] of the level G(x) = h around the center."""
    g = ex.compile_numpy(sys.g_expr)
    xc = float(sys.center[0])

    def G(xk):
        return quad(lambda s: g(s, 0.0), xc, xk, epsabs=1e-13, epsrel=1e-13,
                    limit=200)[0] - h

    def bracket(direction):
        step = 1e-3
        prev = xc
        while step < x_max_scan:
            cand = xc + direction * step
            if G(cand) >= 0:
                return brentq(G, min(prev, cand), max(prev, cand),
                              xtol=1e-13, rtol=4 * np.finfo(float).eps)
            prev = cand
            step *= 1.6
        raise NoBracket(f"level G = {h} not attained within scan range")

    return bracket(-1.0), bracket(+1.0)


def certify_chow_wang(sys, h=None, interval=None, n_grid=257,
                      zero_tol=1e-12, center_window=1e-3):
    """Analytic monotonicity certificate for a Newtonian subsystem.

    Checks the hypotheses (x - x_c) g(x) > 0 away from the center,
    g'(x_c) > 0, and — when the interval comes from an energy level — that
    both endpoints sit on that level.  Then evaluates H on a Chebyshev grid
    over [alpha, beta]: one strict sign away from the center certifies the
    corresponding verdict on T; an identically vanishing H certifies the
    isochronous verdict; a sign change is inconclusive (fall back to the
    numeric certificate).
    """
    if sys.kind != "newtonian":
        raise ValueError("analytic criterion requires a Newtonian subsystem")
    if interval is None:
        if h is None:
            raise ValueError("either an energy level or an interval is required")
        interval = energy_interval(sys, h)
    alpha, beta = float(interval[0]), float(interval[1])
    xc = float(sys.center[0])
    if not alpha < xc < beta:
        raise HypothesisViolated("alpha < x_c < beta", f"[{alpha}, {beta}]")

    g = ex.compile_numpy(sys.g_expr)
    gp = ex.compile_numpy(sys.g_prime)
    gp_c = float(gp(xc, 0.0))
    if gp_c <= 0:
        raise HypothesisViolated("g'(x_c) > 0", f"g'({xc}) = {gp_c:.3e}")

    k = np.arange(n_grid)
    xs = alpha + (beta - alpha) * 0.5 * (1 - np.cos(np.pi * k / (n_grid - 1)))
    off = np.abs(xs - xc) > center_window * (beta - alpha)
    restoring = (xs[off] - xc) * (g(xs[off], 0.0) + 0.0 * xs[off])
    if np.any(restoring <= 0):
        bad = xs[off][restoring <= 0][0]
        raise HypothesisViolated("(x - x_c) g(x) > 0", f"fails at x = {bad}")

    H = np.atleast_1d(chow_wang_H(sys, xs))
    scale = float(np.abs(H).max())
    details = {"alpha": alpha, "beta": beta, "H_min": float(H[off].min()),
               "H_max": float(H[off].max()), "H_scale": scale}
    if scale <= zero_tol:
        verdict, margin = "isochronous", 0.0
    elif np.all(H[off] > 0):
        verdict, margin = "increasing", float(H[off].min() / scale)
    elif np.all(H[off] < 0):
        verdict, margin = "decreasing", float(-H[off].max() / scale)
    else:
        verdict, margin = "inconclusive", 0.0
    return MonotonicityCertificate(method="chow-wang", verdict=verdict,
                                   margin=margin, n_grid=n_grid,
                                   details=details)


def certify_monotone(annulus, n_grid=17, jobs=1, prefer_analytic=True):
    """Best-available certificate for an annulus: the analytic route when the
    subsystem is Newtonian and conclusive, otherwise the numeric one."""
    sys = annulus.subsystem
    if prefer_analytic and sys.kind == "newtonian":
        try:
            cert = certify_chow_wang(sys, h=annulus.outer.energy)
            if cert.verdict != "inconclusive":
                return cert
        except HypothesisViolated:
            pass
    return certify_numeric(annulus, n_grid=n_grid, jobs=jobs)
