#!/usr/bin/env python3
"""
Minimizing tr(Y^T M Y) over Graff(k, n) has a closed-form answer: the flat
whose lift is the bottom (k+1)-eigenspace of the symmetric (n+1) x (n+1)
matrix M, provided that eigenspace is not contained in R^n.

That makes it a good benchmark. Here steepest descent and conjugate
gradient start from the same random flat in Graff(3, 6) and we watch the
distance to the known minimizer shrink. CG should need roughly half the
iterations.
"""
import numpy as np

from graffopt import (StopCriteria, cg_stiefel, quad_oracle, quad_random, quad_solution,
                      random_point, sd_stiefel)
from graffopt.errors import OracleInfeasible

##################################################

def feasible_instance(n, k, seed):
    for attempt in range(16):
        inst = quad_random(n, k, [seed, attempt])
        try:
            return inst, quad_solution(inst)
        except OracleInfeasible:
            continue   # bottom eigenspace lies in R^n; draw again
    raise RuntimeError("no feasible instance")


inst, sol = feasible_instance(6, 3, 1)
print("spectrum of M:", np.round(sol.spectrum, 3))
print(f"optimal value  = {sol.opt_value:.12f}")

oracle = quad_oracle(inst)
Y0 = random_point(6, 3, 123)
stop = StopCriteria(grad_tol=1e-8, max_iter=2000)

sd = sd_stiefel(oracle, Y0, stop, reference=sol.minimizer)
cg = cg_stiefel(oracle, Y0, stop, reference=sol.minimizer)

for name, rep in (("SD", sd), ("CG", cg)):
    last = rep.records[-1]
    print(f"\n{name}: {rep.termination.value} after {rep.iterations} iterations")
    print(f"    f - f* = {last.f - sol.opt_value:.2e}, distance to minimizer = {last.dist_to_solution:.2e}")
    print("    distance every 5 iterations:",
          " ".join(f"{r.dist_to_solution:.1e}" for r in rep.records[::5]))
print(f"\nCG restarts: {cg.restarts}")
