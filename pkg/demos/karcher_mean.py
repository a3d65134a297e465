#!/usr/bin/env python3
"""
The Karcher mean of flats X_1, ..., X_m minimizes the sum of squared
geodesic distances to them. Its Riemannian gradient is -2 sum log_X(X_i),
so no Euclidean derivatives are needed for steepest descent.

For two flats the answer is the midpoint of the geodesic joining them,
which lets us check the optimizer. For three flats there is no formula,
but the gradient at the result should vanish.
"""
import numpy as np

from graffopt import StopCriteria, geodesic_midpoint, mean_oracle, mean_random, sd_stiefel
from graffopt.geom_stiefel import distance

inst = mean_random(19, 7, 2, seed=4)
mid = geodesic_midpoint(*inst.points)
rep = sd_stiefel(mean_oracle(inst), inst.points[0], StopCriteria(max_iter=200), reference=mid)
print(f"two 7-flats in R^19 at distance {distance(*inst.points)[0]:.4f}")
for r in rep.records:
    print(f"  iter {r.iter}: f = {r.f:.10f}  |grad| = {r.gradnorm:.1e}  "
          f"distance to midpoint = {r.dist_to_solution:.1e}")

##################################################

inst3 = mean_random(6, 2, 3, seed=11)
o = mean_oracle(inst3)
rep3 = sd_stiefel(o, inst3.points[0], StopCriteria(max_iter=500))
X = rep3.point
print(f"\nthree planes in R^6: {rep3.termination.value} after {rep3.iterations} iterations")
print("  distances to the data:", np.round([distance(X, p)[0] for p in inst3.points], 4))
print(f"  |sum of logs| at the mean = {np.linalg.norm(o.riemann_grad(X.Y)) / 2:.1e}")
