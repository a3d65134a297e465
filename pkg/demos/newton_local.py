#!/usr/bin/env python3
"""
Newton's method solves Hess f(Delta) = -grad f in the tangent space and
moves along the geodesic in direction Delta. Close to a nondegenerate
minimizer the gradient norm should roughly square at every step.

We start 0.09 away from the minimizer of a quadratic on Graff(2, 5) and
run Newton in Stiefel coordinates and then in projection coordinates,
where the step is a QR retraction instead of a geodesic.
"""
import numpy as np

from graffopt import StopCriteria, newton_projection, newton_stiefel, quad_oracle, quad_random, quad_solution
from graffopt import geom_stiefel as gs
from graffopt.coords import stiefel_to_projection
from graffopt.errors import OracleInfeasible

for attempt in range(16):
    inst = quad_random(5, 2, [2, attempt])
    try:
        sol = quad_solution(inst)
        break
    except OracleInfeasible:
        pass

rng = np.random.default_rng(5)
Y0 = gs.exp(sol.minimizer, gs.random_tangent(sol.minimizer, rng, 0.09), 1.0)
stop = StopCriteria(grad_tol=1e-12, max_iter=10)

rep = newton_stiefel(quad_oracle(inst), Y0, stop, reference=sol.minimizer)
print("Stiefel coordinates")
for r in rep.records:
    print(f"  iter {r.iter}: |grad| = {r.gradnorm:.2e}  distance = {r.dist_to_solution:.2e}  t = {r.step_t:g}")

rep_p = newton_projection(quad_oracle(inst, "projection"), stiefel_to_projection(Y0), stop,
                          reference=sol.minimizer)
print("projection coordinates")
for r in rep_p.records:
    print(f"  iter {r.iter}: |grad| = {r.gradnorm:.2e}  distance = {r.dist_to_solution:.2e}  t = {r.step_t:g}")
