"""Riemannian geometry of Graff(k, n) in projection coordinates.

Tangent vectors at a projector ``P`` are symmetric matrices ``[P, Omega]``
for skew ``Omega``. Exponential map and parallel transport are computed by
moving to Stiefel coordinates and back; the closed-form block formula for
the exponential is kept as :func:`exp_p_literal` for comparison.

Under the conversion ``D_S = D_P Y`` a projection tangent vector has twice
the squared norm of its Stiefel counterpart, so the trace metric used here
is twice the Stiefel one.
"""
from dataclasses import dataclass

import numpy as np

from . import geom_stiefel as gs
from . import numerics
from .coords import ProjectionPoint, projection_to_stiefel, stiefel_to_projection
from .errors import BasePointMismatch, FormulaInconsistent, InvalidInput


def _mat(x):
    return np.asarray(x, dtype=float)


def bracket(X, Y):
    return X @ Y - Y @ X


@dataclass(frozen=True)
class TangentProjection:
    base: ProjectionPoint
    Delta: np.ndarray
    Omega: np.ndarray = None

    def norm(self):
        return float(np.linalg.norm(self.Delta))

    def __neg__(self):
        return TangentProjection(self.base, -self.Delta,
                                 None if self.Omega is None else -self.Omega)

    def __mul__(self, c):
        return TangentProjection(self.base, c * self.Delta,
                                 None if self.Omega is None else c * self.Omega)

    __rmul__ = __mul__


def tangent_from_skew(P, Omega):
    Omega = _mat(Omega)
    if np.max(np.abs(Omega + Omega.T), initial=0.0) > 1e-10 * (1.0 + np.max(np.abs(Omega), initial=0.0)):
        raise InvalidInput("Omega is not skew-symmetric")
    return TangentProjection(P, bracket(_mat(P), Omega), Omega)


def tangent_project_p(P, X):
    """Project a symmetric ambient matrix onto the tangent space: ``[P, [P, X]]``."""
    Pm = _mat(P)
    X = 0.5 * (_mat(X) + _mat(X).T)
    return TangentProjection(P, bracket(Pm, bracket(Pm, X)))


def metric_p(t1, t2):
    if not (t1.base is t2.base or np.array_equal(_mat(t1.base), _mat(t2.base))):
        raise BasePointMismatch("tangent vectors live at different points")
    return float(np.sum(t1.Delta * t2.Delta))


def rgrad_p(P, fP):
    """Riemannian gradient ``[P, [P, f_P]]``; ``f_P`` is symmetrized first."""
    return tangent_project_p(P, fP)


def hess_p(P, fP, fPP_action, Delta, Delta2=None, printed=False):
    """Riemannian Hessian in projection coordinates applied to ``Delta``.

    Evaluates ``[P,[P, f_PP(D)]] - [P,[f_P, D]]`` with ``f_P`` the
    (symmetrized) Euclidean gradient. ``printed=True`` instead evaluates
    ``[P,[P, f_PP(D)]] - 1/2 [P,[g, D]] - 1/2 [g,[P, D]]`` with
    ``g = [P,[P,f_P]]``; that variant does not reproduce second derivatives
    along geodesics and is kept only for comparison. With ``Delta2`` also
    returns the bilinear value ``tr(hess(D) D2)``.
    """
    Pm = _mat(P)
    D = _mat(getattr(Delta, "Delta", Delta))
    fP = _mat(fP)
    fP = 0.5 * (fP + fP.T)
    second = _mat(fPP_action(D))
    second = 0.5 * (second + second.T)
    H = bracket(Pm, bracket(Pm, second))
    if printed:
        g = rgrad_p(P, fP).Delta
        H = H - 0.5 * bracket(Pm, bracket(g, D)) - 0.5 * bracket(g, bracket(Pm, D))
    else:
        H = H - bracket(Pm, bracket(fP, D))
    out = TangentProjection(P, H)
    if Delta2 is None:
        return out
    D2 = _mat(getattr(Delta2, "Delta", Delta2))
    return out, float(np.sum(H * D2))


# -- conversions -----------------------------------------------------------------

def to_stiefel_tangent(Y, Delta):
    """Stiefel velocity ``D_P Y`` of a projection tangent vector at ``P = Y Y^T``."""
    return gs.TangentStiefel(Y, _mat(getattr(Delta, "Delta", Delta)) @ _mat(Y))


def from_stiefel_tangent(P, Y, D):
    """Projection velocity ``D Y^T + Y D^T`` of a Stiefel tangent vector."""
    D = _mat(getattr(D, "Delta", D))
    Ym = _mat(Y)
    return TangentProjection(P, D @ Ym.T + Ym @ D.T)


def exp_p(P, T, t=1.0, literal=False):
    """Exponential map at a projector.

    By default the tangent vector is converted to Stiefel coordinates,
    pushed through the Stiefel exponential and converted back. With
    ``literal=True`` the closed-form block formula is evaluated instead (see
    :func:`exp_p_literal`).
    """
    if literal:
        return exp_p_literal(P, t * T)
    if t == 0:
        return P
    Y = projection_to_stiefel(P)
    Ynew = gs.exp(Y, to_stiefel_tangent(Y, T), t)
    return stiefel_to_projection(Ynew)


def _rotated_frame(Pm, k):
    """Orthogonal ``Theta`` (rows = eigenvectors) with ``Theta P Theta^T = diag(I_{k+1}, 0)``."""
    lam, V = numerics.sym_eig(Pm)
    Theta = V[:, ::-1].T.copy()
    if np.linalg.det(Theta) < 0:
        Theta[-1] *= -1.0
    return Theta


def _sinc(x):
    return np.sinc(x / np.pi)


def exp_p_literal(P, T, tol=1e-9):
    """Closed-form block exponential, evaluated as written, with a self-check.

    ``Z`` is the off-diagonal block of ``Theta [[P, Omega], P] Theta^T`` and
    the result is
    ``I/2 + Theta^T [[cos(2R)/2, -sinc(2R) Z], [-Z^T sinc(2R), -sin(2R')/2]] Theta``
    with ``R = sqrt(Z Z^T)``, ``R' = sqrt(Z^T Z)``. Raises
    ``FormulaInconsistent`` if the output is not a rank-(k+1) orthogonal
    projector to within ``tol``.
    """
    Pm = _mat(P)
    k = P.k
    m = Pm.shape[0]
    p = k + 1
    D = _mat(getattr(T, "Delta", T))
    Theta = _rotated_frame(Pm, k)
    W = Theta @ bracket(D, Pm) @ Theta.T
    Z = W[:p, p:]
    Uz, s, Vzt = np.linalg.svd(Z, full_matrices=True)
    s_left = np.zeros(p)
    s_left[:s.size] = s
    s_right = np.zeros(m - p)
    s_right[:s.size] = s
    cos_left = (Uz * np.cos(2 * s_left)) @ Uz.T
    sinc_left = (Uz * _sinc(2 * s_left)) @ Uz.T
    sin_right = (Vzt.T * np.sin(2 * s_right)) @ Vzt
    block = np.block([[0.5 * cos_left, -sinc_left @ Z],
                      [-Z.T @ sinc_left, -0.5 * sin_right]])
    out = 0.5 * np.eye(m) + Theta.T @ block @ Theta
    residuals = {
        "idempotency": float(np.max(np.abs(out @ out - out))),
        "symmetry": float(np.max(np.abs(out - out.T))),
        "trace": float(abs(np.trace(out) - p)),
    }
    if any(r > tol for r in residuals.values()):
        raise FormulaInconsistent(
            "closed-form projection exponential is not a rank-(k+1) projector", residuals)
    return ProjectionPoint(0.5 * (out + out.T), k)


def transport_p(P, along, t, Delta):
    """Parallel transport by a round trip through Stiefel coordinates."""
    Y = projection_to_stiefel(P)
    H = to_stiefel_tangent(Y, along)
    D = to_stiefel_tangent(Y, Delta)
    if t == 0:
        return TangentProjection(P, _mat(getattr(Delta, "Delta", Delta)).copy())
    moved = gs.transport(Y, H, t, D)
    end = moved.base
    return from_stiefel_tangent(stiefel_to_projection(end), end, moved)


def random_tangent_p(P, rng, scale=1.0):
    X = rng.standard_normal(_mat(P).shape)
    D = tangent_project_p(P, X + X.T).Delta
    return TangentProjection(P, scale * D / np.linalg.norm(D))
