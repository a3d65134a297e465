#!/usr/bin/env python3
"""
In projection coordinates the geodesic through P with velocity Delta can
be computed by converting to Stiefel coordinates, moving there, and
converting back. A closed-form block expression also exists in the literature;
exp_p(..., literal=True) evaluates it as written and checks whether the
result is a rank-(k+1) projector.

It is not, even at zero velocity, where it should return P itself. The
check suite records this as a finding and the library uses the
conversion path.
"""
import numpy as np

from graffopt import coords
from graffopt import geom_projection as gp
from graffopt.checks import run_checks
from graffopt.errors import FormulaInconsistent

P = coords.stiefel_to_projection(coords.random_point(4, 1, 0))
T = gp.random_tangent_p(P, np.random.default_rng(0), 0.3)

Q = gp.exp_p(P, T)
print("conversion path: |P^2 - P| =", f"{np.linalg.norm(Q.P @ Q.P - Q.P):.1e},",
      f"trace = {np.trace(Q.P):.12f}")

for scale in (0.0, 1.0):
    try:
        gp.exp_p(P, scale * T, literal=True)
        print(f"literal path, scale {scale}: consistent")
    except FormulaInconsistent as exc:
        res = ", ".join(f"{k} {v:.2f}" for k, v in exc.residuals.items())
        print(f"literal path, scale {scale}: inconsistent ({res})")

finding = run_checks("geom_projection", cases=50)["suites"][0]["findings"][0]
print("\ncheck report finding:", finding["status"], f"in {finding['inconsistent']}/{finding['cases']} cases")
