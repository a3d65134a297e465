#!/usr/bin/env python3
"""
A k-dimensional affine subspace of R^n (a "k-flat") can be stored in two
ways once it is lifted to a (k+1)-dimensional linear subspace of R^(n+1):
as an orthonormal (n+1) x (k+1) matrix Y, or as the projector P = Y Y^T.

This script builds the line y = 1 in the plane, shows both coordinate
forms, and measures how far it is from the x-axis. It then walks along the
geodesic between two random planes in R^5 and checks that the distance
accumulated along the way adds up.
"""
import numpy as np

from graffopt import coords, distance, geodesic_between, log
from graffopt import geom_projection as gp

np.set_printoptions(precision=4, suppress=True)

##################################################

line = coords.orthogonalize_affine(np.array([[1.0], [0.0]]), np.array([5.0, 1.0]))
print("orthogonal affine coordinates: A =", line.A.ravel(), " b0 =", line.b0)
# the 5 in the first entry lies along A and is dropped

Y = coords.stiefel_from_affine(line)
P = coords.stiefel_to_projection(Y)
print("Stiefel coordinates\n", Y.Y)
print("projection coordinates\n", P.P)
print("feasible as a projector:", coords.feasible_projection(P.P).feasible)

x_axis = coords.stiefel_from_affine(coords.OrthAffine(np.array([[1.0], [0.0]]), np.zeros(2)))
d, dec = distance(x_axis, Y)
print(f"distance to the x-axis = {d:.12f}  (pi/4 = {np.pi / 4:.12f})")
print("affine principal angles:", dec.theta)

##################################################

rng = np.random.default_rng(0)
A = coords.random_point(5, 2, rng)
B = coords.random_point(5, 2, rng)
geo = geodesic_between(A, B)
ts = np.linspace(0.0, 1.0, 6)
pts = [geo.at(t) for t in ts]
steps = [distance(p, q)[0] for p, q in zip(pts, pts[1:])]
print("\ntwo random planes in R^5")
print(f"  d(A, B)             = {distance(A, B)[0]:.12f}")
print(f"  sum of 5 sub-steps  = {sum(steps):.12f}")
print(f"  |log_A(B)|          = {log(A, B).norm():.12f}")

# the same step in projection coordinates lands on the same flat
T = gp.from_stiefel_tangent(coords.stiefel_to_projection(A), A, log(A, B))
P_end = gp.exp_p(coords.stiefel_to_projection(A), T)
print(f"  exp_p(log) vs B     = {distance(coords.projection_to_stiefel(P_end), B)[0]:.2e}")
