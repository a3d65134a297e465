"""Steepest descent, conjugate gradient and Newton on Graff(k, n).

Stiefel-coordinate solvers (:func:`sd_stiefel`, :func:`cg_stiefel`,
:func:`newton_stiefel`) and projection-coordinate solvers
(:func:`sd_projection`, :func:`newton_projection`) share one loop skeleton:
check the gradient, pick a direction, choose a step, move, record.

Iterates are predicted along geodesics in Gr(k+1, n+1) and then checked for
membership in Graff(k, n). A predictor that falls outside (a probability-zero
event) is repaired by :func:`correct_feasible` and counted in the report.
"""
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from . import geom_projection as gp
from . import geom_stiefel as gs
from . import numerics
from .coords import (GAMMA_MIN, ProjectionPoint, StiefelPoint, canonical_frame,
                     feasible_projection, feasible_stiefel, projection_to_stiefel,
                     stiefel_to_projection)
from .errors import InfeasiblePoint, LineSearchFailed, SingularMatrix

GRID_POINTS = 50
GOLDEN_WIDTH = 1e-10
ARMIJO = 1e-4
MAX_HALVINGS = 30
_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


class Termination(Enum):
    GRAD_TOL = "GradTol"
    STEP_TOL = "StepTol"
    MAX_ITER = "MaxIter"
    CORRECTED = "Corrected"
    FAILED = "Failed"


@dataclass(frozen=True)
class ObjectiveOracle:
    """Objective with its Euclidean derivatives.

    Callbacks take the raw coordinate matrix (Stiefel ``Y`` or projector
    ``P``). ``riemann_grad``, when given, is used in place of projecting
    ``euclid_grad``; it must return a tangent matrix at its argument.
    """

    value: Callable
    euclid_grad: Callable
    euclid_hess_action: Optional[Callable] = None
    invariance_declared: bool = True
    riemann_grad: Optional[Callable] = None
    coords: str = "stiefel"


@dataclass(frozen=True)
class StopCriteria:
    grad_tol: float = 1e-8
    step_tol: float = 1e-12
    max_iter: int = 500

    def __post_init__(self):
        if not (self.grad_tol > 0 and self.step_tol > 0 and self.max_iter > 0):
            raise ValueError("stopping tolerances and max_iter must be positive")


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    f: float
    gradnorm: float
    step_t: float
    dist_moved: float
    dist_to_solution: Optional[float]
    elapsed_s: float


@dataclass
class OptimizerReport:
    records: list
    point: object
    termination: Termination
    corrections: int = 0
    fallback_steps: int = 0
    restarts: int = 0
    message: str = ""

    @property
    def iterations(self):
        return self.records[-1].iter if self.records else 0

    @property
    def final_value(self):
        return self.records[-1].f


# -- helpers ------------------------------------------------------------------------

def _mat(x):
    return np.asarray(x, dtype=float)


def _stiefel_grad(oracle, Y):
    if oracle.riemann_grad is not None:
        return _mat(oracle.riemann_grad(Y))
    return gs.tangent_project(Y, oracle.euclid_grad(Y)).Delta


def _stiefel_view(oracle):
    """Stiefel-coordinate oracle for a projection-coordinate one.

    With ``P = Y Y^T`` the chain rule gives ``f_Y = 2 sym(f_P) Y``.
    """
    def value(Y):
        Ym = _mat(Y)
        return oracle.value(Ym @ Ym.T)

    def grad(Y):
        Ym = _mat(Y)
        fP = _mat(oracle.euclid_grad(Ym @ Ym.T))
        return (fP + fP.T) @ Ym

    return ObjectiveOracle(value, grad, invariance_declared=True)


class _Recorder:
    def __init__(self, reference, dist_fn):
        self.records = []
        self.reference = reference
        self.dist_fn = dist_fn
        self.start = time.perf_counter()

    def add(self, point, f, gradnorm, t, moved):
        ref = None if self.reference is None else self.dist_fn(point, self.reference)
        self.records.append(IterationRecord(len(self.records), float(f), float(gradnorm),
                                            float(t), float(moved), ref,
                                            time.perf_counter() - self.start))


def _dist_stiefel(Y, ref):
    return gs.distance(Y, ref)[0]


def _dist_projection(P, ref):
    ref = projection_to_stiefel(ref) if isinstance(ref, ProjectionPoint) else ref
    return gs.distance(projection_to_stiefel(P), ref)[0]


# -- line search ----------------------------------------------------------------------

def _curve_slope(oracle, geo, t):
    """Directional derivative of ``f`` along the geodesic at ``t``."""
    Yt = geo.raw_at(t)
    return float(np.sum(_stiefel_grad(oracle, Yt) * geo.velocity_raw(t)))


def _search(oracle, geo):
    smax = float(np.max(geo.Sigma)) if geo.Sigma.size else 0.0
    if smax <= 0:
        raise LineSearchFailed("zero search direction")
    T = np.pi / (2.0 * smax)

    def phi(t):
        v = float(oracle.value(geo.raw_at(t)))
        if not np.isfinite(v):
            raise LineSearchFailed(f"non-finite objective at t={t:g}", report=(t, v))
        return v

    grid = np.linspace(0.0, T, GRID_POINTS + 1)
    vals = np.array([phi(t) for t in grid])
    j = int(np.argmin(vals))
    best_t, best_f = grid[j], vals[j]
    a, b = grid[max(j - 1, 0)], grid[min(j + 1, GRID_POINTS)]
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = phi(c), phi(d)
    while b - a > GOLDEN_WIDTH:
        if abs(fc - fd) <= 1e-14 * (1.0 + abs(fc)):
            # values agree to rounding; let the slope decide
            go_left = _curve_slope(oracle, geo, 0.5 * (c + d)) > 0
        else:
            go_left = fc < fd
        if go_left:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = phi(d)
        for t, v in ((c, fc), (d, fd)):
            if v < best_f:
                best_t, best_f = t, v
    return float(best_t), float(best_f)


def line_search_geodesic(oracle, Y, direction):
    """Exact line search along the geodesic from ``Y`` in ``direction``.

    A 50-point grid over the first quarter-period ``[0, pi/(2 sigma_max)]``
    brackets the minimum, which golden-section search then refines to an
    interval of width 1e-10. The best point evaluated is returned, so
    ``f_min <= f(Y)`` always holds.

    Returns
    -------
    t_min, f_min : float
    """
    D = _mat(getattr(direction, "Delta", direction))
    if np.linalg.norm(D) == 0:
        raise LineSearchFailed("direction must be nonzero")
    return _search(oracle, gs.GeodesicStiefel.from_tangent(Y, D))


# -- feasibility correction -----------------------------------------------------------

def correct_feasible(raw, form="stiefel", k=None):
    """Repair a predictor that failed the feasibility check.

    Stiefel form: re-orthonormalize and canonicalize. Projection form:
    symmetrize and round the spectrum to {0, 1}. Raises ``InfeasiblePoint``
    when the repaired point still lies in the complement of Graff(k, n).
    """
    M = _mat(raw)
    if form == "stiefel":
        if feasible_stiefel(M).feasible:
            return StiefelPoint(M)
        Q, _ = numerics.thin_qr_pos(M)
        Y, _ = canonical_frame(Q)
        if Y[-1, -1] < GAMMA_MIN:
            raise InfeasiblePoint("corrected point is still outside Graff(k, n)", raw=Y)
        return StiefelPoint(Y)
    if form == "projection":
        S = 0.5 * (M + M.T)
        lam, V = numerics.sym_eig(S)
        top = V[:, lam >= 0.5]
        if k is not None and top.shape[1] != k + 1:
            top = V[:, -(k + 1):]
        P = top @ top.T
        P = 0.5 * (P + P.T)
        if not feasible_projection(P).feasible:
            raise InfeasiblePoint("corrected projector is still outside Graff(k, n)", raw=P)
        return ProjectionPoint(P, top.shape[1] - 1)
    raise ValueError(f"unknown coordinate form {form!r}")


def _advance(geo, t, report):
    """Canonical point at ``t`` on ``geo`` and the frame rotation (None if corrected)."""
    try:
        Y, Q = geo.frame_at(t)
        return Y, Q, t
    except InfeasiblePoint as exc:
        raw = exc.raw
    try:
        Y = correct_feasible(raw, "stiefel")
    except InfeasiblePoint:
        # nudge off the complement along the same geodesic
        t = 0.999 * t
        Y, _ = geo.frame_at(t)
    report.corrections += 1
    return Y, None, t


def _finish(rec, point, termination, report):
    report.records = rec.records
    report.point = point
    report.termination = termination
    return report


# -- Stiefel coordinates -------------------------------------------------------------------

def sd_stiefel(oracle, Y0, stop=StopCriteria(), reference=None):
    """Steepest descent with exact line search in Stiefel coordinates.

    Parameters
    ----------
    oracle : ObjectiveOracle
    Y0 : StiefelPoint
    stop : StopCriteria
    reference : StiefelPoint, optional
        Known solution; each record then carries the distance to it.

    Returns
    -------
    OptimizerReport
    """
    return _descent(oracle, Y0, stop, reference, conjugate=False)


def cg_stiefel(oracle, Y0, stop=StopCriteria(), reference=None):
    """Conjugate gradient in Stiefel coordinates.

    Search direction and gradient are parallel-transported to the new
    iterate and combined with a Polak-Ribiere coefficient. The direction is
    reset to the negative gradient every (k+1)(n-k) iterations, when the
    coefficient's denominator underflows, or when the combined direction is
    not a descent direction.
    """
    return _descent(oracle, Y0, stop, reference, conjugate=True)


def _descent(oracle, Y0, stop, reference, conjugate):
    Y = Y0 if isinstance(Y0, StiefelPoint) else correct_feasible(Y0, "stiefel")
    report = OptimizerReport([], Y, Termination.MAX_ITER)
    rec = _Recorder(reference, _dist_stiefel)
    f = float(oracle.value(Y.Y))
    G = _stiefel_grad(oracle, Y.Y)
    rec.add(Y, f, np.linalg.norm(G), 0.0, 0.0)
    H = -G
    period = (Y.k + 1) * (Y.n - Y.k)
    for i in range(stop.max_iter):
        gnorm = np.linalg.norm(G)
        if gnorm <= stop.grad_tol:
            return _finish(rec, Y, Termination.GRAD_TOL, report)
        if conjugate and np.sum(H * G) >= 0:
            H = -G
            report.restarts += 1
        geo = gs.GeodesicStiefel.from_tangent(Y.Y, H)
        try:
            t, f_new = _search(oracle, geo)
        except LineSearchFailed as exc:
            exc.report = _finish(rec, Y, Termination.FAILED, report)
            raise
        try:
            Y_new, Q, t = _advance(geo, t, report)
        except InfeasiblePoint as exc:
            report.message = str(exc)
            return _finish(rec, Y, Termination.FAILED, report)
        f_new = float(oracle.value(Y_new.Y))
        G_new = _stiefel_grad(oracle, Y_new.Y)
        moved = t * geo.speed
        if conjugate:
            if Q is None or (i + 1) % period == 0:
                H = -G_new
            else:
                tauH = geo.velocity_raw(t) @ Q
                tauG = geo.transport_raw(t, G) @ Q
                denom = float(np.sum(G * G))
                if denom < 1e-30:
                    H = -G_new
                else:
                    gamma = float(np.sum((G_new - tauG) * G_new)) / denom
                    H = -G_new + gamma * tauH
        else:
            H = -G_new
        Y, f, G = Y_new, f_new, G_new
        rec.add(Y, f, np.linalg.norm(G), t, moved)
        if moved <= stop.step_tol:
            return _finish(rec, Y, Termination.STEP_TOL, report)
    if np.linalg.norm(G) <= stop.grad_tol:
        return _finish(rec, Y, Termination.GRAD_TOL, report)
    return _finish(rec, Y, Termination.MAX_ITER, report)


def _tangent_hessian(basis, apply):
    d = len(basis)
    Hm = np.empty((d, d))
    for j, B in enumerate(basis):
        HB = apply(B)
        for i, Bi in enumerate(basis):
            Hm[i, j] = np.sum(Bi * HB)
    return 0.5 * (Hm + Hm.T)


def _newton_coefficients(Hm, rhs):
    """Solve the tangent Newton system; None when the Hessian is not positive definite."""
    if Hm.size == 0:
        return None
    lam = np.linalg.eigvalsh(Hm)
    if lam[0] <= 1e-12 * max(abs(lam[-1]), 1e-300):
        return None
    try:
        return numerics.solve_dense(Hm, rhs)
    except SingularMatrix:
        return None


def _backtrack(phi, f0, slope):
    """Step ``t = 1`` halved until the Armijo condition holds (rounding-tolerant)."""
    noise = 4 * np.finfo(float).eps * (1.0 + abs(f0))
    t = 1.0
    for _ in range(MAX_HALVINGS):
        ft = phi(t)
        if np.isfinite(ft) and ft <= f0 + ARMIJO * t * slope + noise:
            return t, ft
        t *= 0.5
    return t, phi(t)


def newton_direction(oracle, Y, G=None):
    """Solve the Newton equation at ``Y`` in the tangent basis ``Y_perp E_ij``.

    Returns
    -------
    Delta : ndarray or None
        The Newton direction, or None when the tangent Hessian is singular
        or not positive definite.
    Hm : ndarray
        The (k+1)(n-k) square matrix of the tangent Hessian in that basis.
    """
    Ym = _mat(Y)
    if G is None:
        G = _stiefel_grad(oracle, Ym)
    fY = _mat(oracle.euclid_grad(Ym))

    def act(D):
        return oracle.euclid_hess_action(Ym, D)

    basis = gs.tangent_basis(Ym)
    Hm = _tangent_hessian(basis, lambda B: gs.hess(Ym, fY, act, B).Delta)
    rhs = -np.array([np.sum(B * G) for B in basis])
    coef = _newton_coefficients(Hm, rhs)
    if coef is None:
        return None, Hm
    return sum(c * B for c, B in zip(coef, basis)), Hm


def newton_stiefel(oracle, Y0, stop=StopCriteria(), reference=None):
    """Newton's method in Stiefel coordinates.

    The Newton equation is solved in the orthonormal tangent basis
    ``Y_perp E_ij`` of dimension (k+1)(n-k). The step starts at ``t = 1``
    and is halved until the Armijo condition holds. When the tangent
    Hessian is singular or not positive definite the iteration takes a
    steepest-descent step with exact line search instead; such steps are
    counted in ``fallback_steps``.
    """
    if oracle.euclid_hess_action is None:
        raise ValueError("Newton's method needs euclid_hess_action")
    Y = Y0 if isinstance(Y0, StiefelPoint) else correct_feasible(Y0, "stiefel")
    report = OptimizerReport([], Y, Termination.MAX_ITER)
    rec = _Recorder(reference, _dist_stiefel)
    f = float(oracle.value(Y.Y))
    G = _stiefel_grad(oracle, Y.Y)
    rec.add(Y, f, np.linalg.norm(G), 0.0, 0.0)
    for _ in range(stop.max_iter):
        if np.linalg.norm(G) <= stop.grad_tol:
            return _finish(rec, Y, Termination.GRAD_TOL, report)
        Ym = Y.Y
        Delta, _ = newton_direction(oracle, Ym, G)
        if Delta is None:
            report.fallback_steps += 1
            geo = gs.GeodesicStiefel.from_tangent(Ym, -G)
            t, _ = _search(oracle, geo)
        else:
            geo = gs.GeodesicStiefel.from_tangent(Ym, Delta)
            t, _ = _backtrack(lambda s: float(oracle.value(geo.raw_at(s))), f,
                              float(np.sum(G * Delta)))
        try:
            Y, _, t = _advance(geo, t, report)
        except InfeasiblePoint as exc:
            report.message = str(exc)
            return _finish(rec, Y, Termination.FAILED, report)
        moved = t * geo.speed
        f = float(oracle.value(Y.Y))
        G = _stiefel_grad(oracle, Y.Y)
        rec.add(Y, f, np.linalg.norm(G), t, moved)
        if moved <= stop.step_tol:
            return _finish(rec, Y, Termination.STEP_TOL, report)
    if np.linalg.norm(G) <= stop.grad_tol:
        return _finish(rec, Y, Termination.GRAD_TOL, report)
    return _finish(rec, Y, Termination.MAX_ITER, report)


# -- projection coordinates --------------------------------------------------------------

def _projection_start(P0):
    if isinstance(P0, ProjectionPoint):
        return P0
    if isinstance(P0, StiefelPoint):
        return stiefel_to_projection(P0.Y)
    raise TypeError("expected a ProjectionPoint")


def _projection_grad(oracle, P):
    return gp.rgrad_p(P, oracle.euclid_grad(_mat(P))).Delta


def sd_projection(oracle, P0, stop=StopCriteria(), reference=None):
    """Steepest descent in projection coordinates.

    The gradient ``[P,[P,f_P]]`` is computed in projection coordinates; the
    step is taken along the corresponding geodesic with the same exact line
    search as :func:`sd_stiefel`, through the conversion ``D_S = D_P Y``.
    """
    P = _projection_start(P0)
    sview = _stiefel_view(oracle)
    report = OptimizerReport([], P, Termination.MAX_ITER)
    rec = _Recorder(reference, _dist_projection)
    f = float(oracle.value(P.P))
    G = _projection_grad(oracle, P)
    rec.add(P, f, np.linalg.norm(G), 0.0, 0.0)
    for _ in range(stop.max_iter):
        if np.linalg.norm(G) <= stop.grad_tol:
            return _finish(rec, P, Termination.GRAD_TOL, report)
        Y = projection_to_stiefel(P)
        geo = gs.GeodesicStiefel.from_tangent(Y.Y, gp.to_stiefel_tangent(Y.Y, -G).Delta)
        try:
            t, _ = _search(sview, geo)
        except LineSearchFailed as exc:
            exc.report = _finish(rec, P, Termination.FAILED, report)
            raise
        try:
            Y_new, _, t = _advance(geo, t, report)
        except InfeasiblePoint as exc:
            report.message = str(exc)
            return _finish(rec, P, Termination.FAILED, report)
        P = stiefel_to_projection(Y_new.Y)
        moved = t * geo.speed
        f = float(oracle.value(P.P))
        G = _projection_grad(oracle, P)
        rec.add(P, f, np.linalg.norm(G), t, moved)
        if moved <= stop.step_tol:
            return _finish(rec, P, Termination.STEP_TOL, report)
    if np.linalg.norm(G) <= stop.grad_tol:
        return _finish(rec, P, Termination.GRAD_TOL, report)
    return _finish(rec, P, Termination.MAX_ITER, report)


def projection_tangent_basis(P):
    """Orthonormal (Frobenius) basis of the tangent space at a projector."""
    Y = projection_to_stiefel(P).Y
    return [(B @ Y.T + Y @ B.T) / np.sqrt(2.0) for B in gs.tangent_basis(Y)]


def qr_retraction(P, Omega, t):
    """Move ``P`` by the orthogonal QR factor of ``Theta (I - t[P,[P,Omega]]) Theta^T``.

    ``Theta`` rotates ``P`` to ``diag(I_{k+1}, 0)``. For skew ``Omega`` the
    curve has initial velocity ``[P, [P, [P, Omega]]]``.
    """
    Pm = _mat(P)
    Theta = gp._rotated_frame(Pm, P.k)
    X = np.eye(Pm.shape[0]) - t * gp.bracket(Pm, gp.bracket(Pm, Omega))
    Q, _ = numerics.qr_pos(Theta @ X @ Theta.T)
    Qt = Theta.T @ Q @ Theta
    out = Qt @ Pm @ Qt.T
    return 0.5 * (out + out.T)


def newton_projection(oracle, P0, stop=StopCriteria(), reference=None):
    """Newton's method in projection coordinates.

    The Newton equation is posed for skew ``Omega`` restricted to the
    horizontal matrices ``[P, xi]`` with ``xi`` tangent, where the map
    ``Omega -> [P, Omega]`` is a bijection onto the tangent space; this makes
    the linear system nonsingular. The step uses the QR retraction
    :func:`qr_retraction` with Armijo backtracking.
    """
    if oracle.euclid_hess_action is None:
        raise ValueError("Newton's method needs euclid_hess_action")
    P = _projection_start(P0)
    report = OptimizerReport([], P, Termination.MAX_ITER)
    rec = _Recorder(reference, _dist_projection)
    f = float(oracle.value(P.P))
    fP = _mat(oracle.euclid_grad(P.P))
    G = gp.rgrad_p(P, fP).Delta
    rec.add(P, f, np.linalg.norm(G), 0.0, 0.0)
    for _ in range(stop.max_iter):
        if np.linalg.norm(G) <= stop.grad_tol:
            return _finish(rec, P, Termination.GRAD_TOL, report)
        Pm = P.P

        def act(D, Pm=Pm):
            return oracle.euclid_hess_action(Pm, D)

        basis = projection_tangent_basis(P)
        Hm = _tangent_hessian(basis, lambda B: gp.hess_p(Pm, fP, act, B).Delta)
        rhs = -np.array([np.sum(B * G) for B in basis])
        coef = _newton_coefficients(Hm, rhs)
        if coef is None:
            report.fallback_steps += 1
            xi = -G
        else:
            xi = sum(c * B for c, B in zip(coef, basis))
        Omega = gp.bracket(Pm, xi)

        def phi(s):
            return float(oracle.value(qr_retraction(P, Omega, s)))

        t, _ = _backtrack(phi, f, float(np.sum(G * xi)))
        raw = qr_retraction(P, Omega, t)
        if feasible_projection(raw).feasible:
            P_new = ProjectionPoint(raw, P.k)
        else:
            try:
                P_new = correct_feasible(raw, "projection", P.k)
            except InfeasiblePoint as exc:
                report.message = str(exc)
                return _finish(rec, P, Termination.FAILED, report)
            report.corrections += 1
        moved = gs.distance(projection_to_stiefel(P), projection_to_stiefel(P_new))[0]
        P = P_new
        f = float(oracle.value(P.P))
        fP = _mat(oracle.euclid_grad(P.P))
        G = gp.rgrad_p(P, fP).Delta
        rec.add(P, f, np.linalg.norm(G), t, moved)
        if moved <= stop.step_tol:
            return _finish(rec, P, Termination.STEP_TOL, report)
    if np.linalg.norm(G) <= stop.grad_tol:
        return _finish(rec, P, Termination.GRAD_TOL, report)
    return _finish(rec, P, Termination.MAX_ITER, report)
