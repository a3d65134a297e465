"""Riemannian geometry of Graff(k, n) in Stiefel coordinates.

Tangent vectors at ``Y`` are (n+1) x (k+1) matrices with ``Y^T D = 0`` and
the metric is the Frobenius inner product. Functions accept either a
:class:`~graffopt.coords.StiefelPoint` or a bare orthonormal matrix; the
latter is convenient for intermediate points that have not been put into
canonical form.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import numerics
from .coords import GAMMA_MIN, StiefelPoint, canonical_frame
from .errors import BasePointMismatch, GeodesicSingular, InfeasiblePoint

SINGULAR_TOL = 1e-10


def _mat(x):
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class TangentStiefel:
    base: object
    Delta: np.ndarray

    def norm(self):
        return float(np.linalg.norm(self.Delta))

    def __neg__(self):
        return TangentStiefel(self.base, -self.Delta)

    def __mul__(self, c):
        return TangentStiefel(self.base, c * self.Delta)

    __rmul__ = __mul__


class PrincipalDecomposition(NamedTuple):
    theta: np.ndarray
    Pvecs: np.ndarray
    Qvecs: np.ndarray
    U: np.ndarray
    V: np.ndarray


def _complete_columns(Y, U, S, tol=1e-13):
    """Replace left singular vectors of zero singular values by ones orthogonal to Y.

    LAPACK returns an arbitrary orthonormal completion for a null singular
    value; the geodesic formulas do not care, but keeping ``Y^T U = 0``
    makes the factors a valid geodesic description on their own. When
    k+1 > n-k there is no room for that and ``U`` is returned unchanged.
    """
    smax = S[0] if S.size else 0.0
    null = S <= tol * max(smax, 1.0)
    if not np.any(null):
        return U
    keep = ~null
    basis = np.hstack([Y, U[:, keep]])
    if basis.shape[1] + int(null.sum()) > Y.shape[0]:
        return U
    Qfull, _ = np.linalg.qr(basis, mode="complete")
    U = U.copy()
    U[:, null] = Qfull[:, basis.shape[1]:basis.shape[1] + int(null.sum())]
    return U


@dataclass(frozen=True)
class GeodesicStiefel:
    """The curve ``t -> Y V cos(t S) V^T + U sin(t S) V^T`` starting at ``base``."""

    base: object
    U: np.ndarray
    Sigma: np.ndarray
    V: np.ndarray

    @classmethod
    def from_tangent(cls, Y, H):
        Ym, Hm = _mat(Y), _mat(getattr(H, "Delta", H))
        U, S, V = numerics.condensed_svd(Hm)
        U = _complete_columns(Ym, U, S)
        return cls(Y, U, S, V)

    @property
    def speed(self):
        return float(np.linalg.norm(self.Sigma))

    def raw_at(self, t):
        Y = _mat(self.base)
        c, s = np.cos(t * self.Sigma), np.sin(t * self.Sigma)
        YV = Y @ self.V
        return (YV * c) @ self.V.T + (self.U * s) @ self.V.T

    def velocity_raw(self, t):
        Y = _mat(self.base)
        c, s = np.cos(t * self.Sigma), np.sin(t * self.Sigma)
        return ((-(Y @ self.V) * s + self.U * c) * self.Sigma) @ self.V.T

    def transport_raw(self, t, D):
        """Parallel transport of ``D`` (tangent at ``base``) to ``raw_at(t)``."""
        Y = _mat(self.base)
        D = _mat(getattr(D, "Delta", D))
        c, s = np.cos(t * self.Sigma), np.sin(t * self.Sigma)
        UtD = self.U.T @ D
        return D - (Y @ self.V) @ (s[:, None] * UtD) + self.U @ ((c - 1.0)[:, None] * UtD)

    def frame_at(self, t, gamma_min=GAMMA_MIN):
        """Canonical point at ``t`` plus the rotation ``Q`` with ``Y_can = Y_raw Q``."""
        raw = self.raw_at(t)
        # rounding drift feeds back through the gradient projection and
        # grows geometrically over many steps; clear it every time
        if np.max(np.abs(raw.T @ raw - np.eye(raw.shape[1])), initial=0.0) > 4 * np.finfo(float).eps:
            raw = numerics.thin_qr_pos(raw)[0]
        try:
            Y, Q = canonical_frame(raw)
        except InfeasiblePoint as exc:
            raise InfeasiblePoint(f"geodesic leaves Graff at t={t:g}", raw=exc.raw) from None
        if Y[-1, -1] < gamma_min:
            raise InfeasiblePoint(f"geodesic leaves Graff at t={t:g}", raw=raw)
        return StiefelPoint(Y), Q

    def at(self, t):
        return self.frame_at(t)[0]


def tangent_project(Y, Z):
    """Orthogonal projection of an ambient matrix onto the tangent space at ``Y``."""
    Ym, Z = _mat(Y), _mat(Z)
    return TangentStiefel(Y, Z - Ym @ (Ym.T @ Z))


def _same_base(a, b):
    return a is b or np.array_equal(_mat(a), _mat(b))


def metric(t1, t2):
    if not _same_base(t1.base, t2.base):
        raise BasePointMismatch("tangent vectors live at different points")
    return float(np.sum(t1.Delta * t2.Delta))


def exp(Y, H, t=1.0):
    """Follow the geodesic from ``Y`` with initial velocity ``H`` for time ``t``.

    The result is put in canonical form. Raises ``InfeasiblePoint`` (with the
    raw orthonormal matrix attached) if the geodesic crosses the complement
    of Graff(k, n) in Gr(k+1, n+1) exactly at ``t``.
    """
    if t == 0:
        return Y if isinstance(Y, StiefelPoint) else StiefelPoint(canonical_frame(Y)[0])
    return GeodesicStiefel.from_tangent(Y, H).at(t)


def transport(Y, H, t, Delta):
    """Parallel transport of ``Delta`` along the geodesic ``exp(Y, s H)`` to ``s = t``.

    The returned tangent vector is expressed at the canonical representative
    of the end point.
    """
    if t == 0:
        return TangentStiefel(Y, _mat(getattr(Delta, "Delta", Delta)).copy())
    geo = GeodesicStiefel.from_tangent(Y, H)
    end, Q = geo.frame_at(t)
    return TangentStiefel(end, geo.transport_raw(t, Delta) @ Q)


def principal_angles(Y1, Y2):
    """Affine principal angles and vectors between two points.

    Angles come from ``atan2(sin, cos)`` rather than ``arccos`` alone, which
    keeps full relative accuracy for nearly coincident flats.
    """
    A, B = _mat(Y1), _mat(Y2)
    U, c, V = numerics.condensed_svd(A.T @ B)
    c = np.clip(c, 0.0, 1.0)
    W = B @ V - A @ (U * c)
    s = np.linalg.norm(W, axis=0)
    theta = np.arctan2(s, c)
    order = np.argsort(theta, kind="stable")
    theta, U, V = theta[order], U[:, order], V[:, order]
    return PrincipalDecomposition(theta, A @ U, B @ V, U, V)


def distance(Y1, Y2):
    """Geodesic distance ``sqrt(sum theta_i^2)`` and the principal decomposition."""
    dec = principal_angles(Y1, Y2)
    return float(np.linalg.norm(dec.theta)), dec


def geodesic_between(Y1, Y2):
    """Minimizing geodesic with ``gamma(0) = Y1`` and ``gamma(1)`` spanning ``Y2``.

    Built from the SVD ``(I - Y1 Y1^T) Y2 (Y1^T Y2)^{-1} = Q tan(Theta) U^T``;
    raises ``GeodesicSingular`` when ``Y1^T Y2`` is singular (an angle of pi/2).
    """
    A, B = _mat(Y1), _mat(Y2)
    C = A.T @ B
    smin = np.linalg.svd(C, compute_uv=False)[-1]
    if smin <= SINGULAR_TOL:
        raise GeodesicSingular(f"principal angle pi/2 (sigma_min = {smin:.2e})")
    R = B - A @ C
    M = np.linalg.solve(C.T, R.T).T
    Q, tan_theta, U = numerics.condensed_svd(M)
    theta = np.arctan(tan_theta)
    Q = _complete_columns(A, Q, tan_theta)
    return GeodesicStiefel(Y1, Q, theta, U)


def log(Y1, Y2):
    """Initial velocity ``Q Theta U^T`` of the minimizing geodesic from Y1 to Y2."""
    geo = geodesic_between(Y1, Y2)
    return TangentStiefel(Y1, (geo.U * geo.Sigma) @ geo.V.T)


def rgrad(Y, fY):
    """Riemannian gradient from the Euclidean derivative of a right-invariant f."""
    return tangent_project(Y, fY)


def hess(Y, fY, fYY_action, Delta, Delta2=None):
    """Riemannian Hessian applied to ``Delta``.

    ``fYY_action(D)`` must return the Euclidean second-derivative contraction
    ``sum (f_YY)_{ij,hl} D_ij E_hl``. Returns the tangent vector; when
    ``Delta2`` is given, returns ``(vector, bilinear value)``.
    """
    Ym = _mat(Y)
    D = _mat(getattr(Delta, "Delta", Delta))
    fY = _mat(fY)
    ambient = _mat(fYY_action(D)) - D @ (fY.T @ Ym)
    out = tangent_project(Y, ambient)
    if Delta2 is None:
        return out
    D2 = _mat(getattr(Delta2, "Delta", Delta2))
    return out, float(np.sum(out.Delta * D2))


def tangent_basis(Y):
    """Orthonormal basis of the tangent space at ``Y``, dimension (k+1)(n-k).

    Elements are ``Y_perp E_ij`` for the standard basis ``E_ij`` of
    (n-k) x (k+1) matrices, in column-major order.
    """
    Ym = _mat(Y)
    m, p = Ym.shape
    Qfull, _ = np.linalg.qr(Ym, mode="complete")
    Yperp = Qfull[:, p:]
    basis = []
    for j in range(p):
        for i in range(m - p):
            E = np.zeros((m, p))
            E[:, j] = Yperp[:, i]
            basis.append(E)
    return basis


def random_tangent(Y, rng, scale=1.0):
    """Random unit-direction tangent vector of Frobenius norm ``scale``."""
    Ym = _mat(Y)
    D = tangent_project(Y, rng.standard_normal(Ym.shape)).Delta
    return TangentStiefel(Y, scale * D / np.linalg.norm(D))
