"""Certify period-function monotonicity, analytically and numerically.

For a Newtonian center x'' + g(x) = 0 the sign of

    H(x) = g^2 + g''g^3 / (3 g'(x_c)^2) - 2 G g'

on a punctured neighbourhood of the center decides whether the period
function is strictly increasing (H > 0), strictly decreasing (H < 0) or
merits no conclusion.  The numeric fallback brackets the verdict with a
dense period profile instead.

Run:  python demos/monotonicity_certificates.py
"""
import numpy as np

from horseshoe.monotone import certify_monotone, certify_numeric, chow_wang_H
from horseshoe.orbits import AnnulusSpec, newtonian_subsystem

CASES = [
    ("harmonic g(x) = x (isochronous)", "x", 0.0, (0.5, 0.0), (2.0, 0.0)),
    ("pendulum g(x) = sin x", "sin(x)", 0.0, (0.4, 0.0), (2.4, 0.0)),
    ("hardening Duffing about x = 2", "(x - 2) + (x - 2)^3", 2.0,
     (2.2, 0.0), (3.0, 0.0)),
]

for title, g, xc, seed_in, seed_out in CASES:
    sys = newtonian_subsystem(g, xc)
    ann = AnnulusSpec.from_seeds(sys, seed_in, seed_out)
    analytic = certify_monotone(ann, prefer_analytic=True)
    numeric = certify_numeric(ann)
    xs = np.linspace(xc - 0.5, xc + 0.5, 5)
    hs = ", ".join(f"{float(chow_wang_H(sys, x)):+.2e}" for x in xs)
    print(title)
    print(f"  H near the center: [{hs}]")
    print(f"  analytic verdict: {analytic.verdict} ({analytic.method})")
    print(f"  numeric verdict:  {numeric.verdict} "
          f"(margin {numeric.margin:.3e})")
