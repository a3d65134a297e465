"""Benchmark problems with closed-form solutions.

* A quadratic ``f(Y) = tr(Y^T M Y)`` with ``M = [[A, b], [b^T, c]]``, whose
  minimum over Graff(k, n) is the sum of the k+1 smallest eigenvalues of
  ``M`` (attained at the bottom eigenspace whenever that is feasible).
* The sum of squared distances to m given flats. For m = 2 the minimizer
  is the midpoint of the geodesic joining them.
"""
from dataclasses import dataclass

import numpy as np

from . import geom_stiefel as gs
from .coords import GAMMA_MIN, StiefelPoint, canonical_frame, random_point
from .errors import GeodesicSingular, InfeasiblePoint, InvalidInput, OracleInfeasible
from .optimize import ObjectiveOracle

FD_STEP = 1e-5


@dataclass(frozen=True)
class QuadraticInstance:
    M: np.ndarray
    n: int
    k: int
    seed: object = None

    def __post_init__(self):
        M = np.array(self.M, dtype=float)
        if M.shape != (self.n + 1, self.n + 1):
            raise InvalidInput(f"M must be {(self.n + 1, self.n + 1)}, got {M.shape}")
        if np.max(np.abs(M - M.T), initial=0.0) > 1e-12 * (1.0 + np.max(np.abs(M))):
            raise InvalidInput("M must be symmetric")
        if not 0 <= self.k < self.n:
            raise InvalidInput("need 0 <= k < n")
        M.setflags(write=False)
        object.__setattr__(self, "M", M)

    @classmethod
    def from_blocks(cls, A, b, c, k, seed=None):
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float).reshape(-1, 1)
        M = np.block([[A, b], [b.T, np.array([[float(c)]])]])
        return cls(M, A.shape[0], k, seed)


@dataclass(frozen=True)
class QuadraticSolution:
    opt_value: float
    minimizer: StiefelPoint
    spectrum: np.ndarray


@dataclass(frozen=True)
class MeanInstance:
    points: tuple
    seed: object = None

    def __post_init__(self):
        pts = tuple(self.points)
        if len(pts) < 1:
            raise InvalidInput("need at least one point")
        shapes = {np.shape(p) for p in pts}
        if len(shapes) != 1:
            raise InvalidInput("points must live on a common Graff(k, n)")
        object.__setattr__(self, "points", pts)

    @property
    def n(self):
        return np.shape(self.points[0])[0] - 1

    @property
    def k(self):
        return np.shape(self.points[0])[1] - 1

    @property
    def m(self):
        return len(self.points)


# -- quadratic ------------------------------------------------------------------------------

def quad_random(n, k, seed):
    """Random instance: ``A = (G + G^T)/2``, ``b`` and ``c`` standard normal."""
    if not 0 <= k < n:
        raise InvalidInput("need 0 <= k < n")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n))
    b = rng.standard_normal(n)
    c = rng.standard_normal()
    return QuadraticInstance.from_blocks(0.5 * (G + G.T), b, c, k, seed)


def quad_oracle(inst, coords="stiefel"):
    """Oracle for ``tr(Y^T M Y)`` (Stiefel) or ``tr(M P)`` (projection).

    Stiefel: ``f_Y = 2 M Y`` and Hessian action ``2 M D``.
    Projection: ``f_P = M`` and a zero second derivative.
    """
    M = inst.M
    m = M.shape[0]
    p = inst.k + 1

    def check(X, cols):
        X = np.asarray(X, dtype=float)
        if X.shape != (m, cols):
            raise InvalidInput(f"expected shape {(m, cols)}, got {X.shape}")
        return X

    if coords == "stiefel":
        def value(Y):
            Y = check(Y, p)
            return float(np.sum(Y * (M @ Y)))

        return ObjectiveOracle(value, lambda Y: 2.0 * M @ check(Y, p),
                               lambda Y, D: 2.0 * M @ np.asarray(D, dtype=float),
                               invariance_declared=True, coords="stiefel")
    if coords == "projection":
        return ObjectiveOracle(lambda P: float(np.sum(M * check(P, m))),
                               lambda P: M.copy(),
                               lambda P, D: np.zeros((m, m)),
                               invariance_declared=True, coords="projection")
    raise InvalidInput(f"unknown coordinates {coords!r}")


def quad_solution(inst):
    """Closed-form optimum: the bottom (k+1)-eigenspace of ``M``.

    Raises ``OracleInfeasible`` when that eigenspace lies in R^n, i.e. is
    not the image of an affine flat.
    """
    lam, V = np.linalg.eigh(inst.M)
    p = inst.k + 1
    try:
        Y, _ = canonical_frame(V[:, :p])
    except InfeasiblePoint:
        raise OracleInfeasible("bottom eigenspace is outside Graff(k, n)") from None
    if Y[-1, -1] < GAMMA_MIN:
        raise OracleInfeasible("bottom eigenspace is outside Graff(k, n)")
    return QuadraticSolution(float(np.sum(lam[:p])), StiefelPoint(Y), lam)


# -- sum of squared distances -----------------------------------------------------------------

def _angle_gradient(Q, pts):
    """Derivative of ``sum_i sum_j theta_ij^2`` w.r.t. an orthonormal ``Q``.

    With ``Q^T Y_i = U cos(Theta) V^T``, ``d(theta^2) = -2 theta/sin(theta) d(cos theta)``.
    """
    G = np.zeros_like(Q)
    for Yi in pts:
        dec = gs.principal_angles(Q, Yi)
        th = dec.theta
        ratio = np.ones_like(th)
        big = th > 1e-8
        ratio[big] = th[big] / np.sin(th[big])
        G -= 2.0 * (np.asarray(Yi) @ dec.V * ratio) @ dec.U.T
    return G


def _span_extension_grad(Z, pts):
    """Euclidean gradient of the span-invariant extension ``Z -> f(span Z)``."""
    Z = np.asarray(Z, dtype=float)
    Q, R = np.linalg.qr(Z)
    G = _angle_gradient(Q, pts)
    N = G - Q @ (Q.T @ G)
    return np.linalg.solve(R, N.T).T


def _central(fn, X, D, h=FD_STEP):
    return (fn(X + h * D) - fn(X - h * D)) / (2 * h)


def _top_eigvecs(P, p):
    lam, V = np.linalg.eigh(0.5 * (P + P.T))
    return lam, V, V[:, -p:]


def _projection_extension_grad(P, pts, p):
    """Gradient of ``P -> f(top-(k+1) eigenspace of P)`` for symmetric ``P``."""
    lam, V, V1 = _top_eigvecs(np.asarray(P, dtype=float), p)
    V2 = V[:, :-p]
    G = _angle_gradient(V1, pts)
    C = 1.0 / (lam[-p:][None, :] - lam[:-p][:, None])
    X = V2 @ (C * (V2.T @ G)) @ V1.T
    return 0.5 * (X + X.T)


def mean_oracle(inst, coords="stiefel"):
    """Oracle for ``f(X) = sum_i d^2(X, X_i)``.

    In Stiefel coordinates the Riemannian gradient ``-2 sum_i log_X(X_i)``
    is supplied directly. Euclidean derivatives refer to the extension of
    ``f`` that depends only on the span of its argument; the second
    derivative is a central difference of that analytic gradient.
    """
    pts = [np.asarray(p, dtype=float) for p in inst.points]
    p = inst.k + 1

    if coords == "stiefel":
        def value(Y):
            return float(sum(gs.distance(Y, Yi)[0] ** 2 for Yi in pts))

        def rgrad(Y):
            return -2.0 * sum(gs.log(Y, Yi).Delta for Yi in pts)

        def egrad(Y):
            return _span_extension_grad(Y, pts)

        def hess_action(Y, D):
            return _central(egrad, np.asarray(Y, dtype=float), np.asarray(D, dtype=float))

        return ObjectiveOracle(value, egrad, hess_action, True, rgrad, "stiefel")
    if coords == "projection":
        def value_p(P):
            V1 = _top_eigvecs(np.asarray(P, dtype=float), p)[2]
            return float(sum(gs.distance(V1, Yi)[0] ** 2 for Yi in pts))

        def egrad_p(P):
            return _projection_extension_grad(P, pts, p)

        def hess_p(P, D):
            D = np.asarray(D, dtype=float)
            return _central(egrad_p, np.asarray(P, dtype=float), 0.5 * (D + D.T))

        return ObjectiveOracle(value_p, egrad_p, hess_p, True, None, "projection")
    raise InvalidInput(f"unknown coordinates {coords!r}")


def geodesic_midpoint(Y1, Y2):
    """Point halfway along the minimizing geodesic from ``Y1`` to ``Y2``."""
    return gs.geodesic_between(Y1, Y2).at(0.5)


def mean_random(n, k, m, seed, max_retries=16):
    """``m`` random flats with every pair joined by a unique minimizing geodesic."""
    if m < 2:
        raise InvalidInput("need m >= 2")
    for attempt in range(max_retries):
        rng = np.random.default_rng([seed, attempt])
        pts = [random_point(n, k, rng) for _ in range(m)]
        try:
            for i in range(m):
                for j in range(i + 1, m):
                    gs.geodesic_between(pts[i], pts[j])
        except GeodesicSingular:
            continue
        return MeanInstance(tuple(pts), seed)
    raise GeodesicSingular(f"no admissible draw after {max_retries} attempts")
