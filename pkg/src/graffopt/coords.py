"""Coordinates for points of the affine Grassmannian Graff(k, n).

A k-flat ``A + b`` of R^n is stored either as

* orthogonal affine coordinates ``[A, b0]`` (``A`` orthonormal, ``A^T b0 = 0``),
* Stiefel coordinates, the (n+1) x (k+1) orthonormal matrix
  ``[[A, b0/s], [0, 1/s]]`` with ``s = sqrt(1 + |b0|^2)``, or
* projection coordinates, the (n+1) x (n+1) orthogonal projector ``Y Y^T``.

Stiefel coordinates are unique up to ``Y -> Y diag(Q', 1)``; projection
coordinates are unique.
"""
from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .errors import (InfeasiblePoint, InvalidInput, NotAProjection,
                     RankDeficient)

GAMMA_MIN = 1e-8
ORTHO_TOL = 1e-10
ORTHO_REJECT = 1e-6
CANON_GAMMA = 1e-10
EIG_CLUSTER_TOL = 1e-6


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class OrthAffine:
    A: np.ndarray
    b0: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b0 = np.asarray(self.b0, dtype=float).ravel()
        if A.ndim != 2 or A.shape[0] != b0.size:
            raise InvalidInput("A must be n x k and b0 an n-vector")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "b0", _frozen(b0))

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def k(self):
        return self.A.shape[1]


@dataclass(frozen=True)
class StiefelPoint:
    """Canonical Stiefel coordinates ``[[A, b], [0, gamma]]`` with ``gamma > 0``."""

    Y: np.ndarray

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=float)
        if Y.ndim != 2 or Y.shape[0] <= Y.shape[1]:
            raise InvalidInput(f"Stiefel matrix must be (n+1) x (k+1) with k < n, got {Y.shape}")
        object.__setattr__(self, "Y", _frozen(Y))

    @property
    def n(self):
        return self.Y.shape[0] - 1

    @property
    def k(self):
        return self.Y.shape[1] - 1

    @property
    def gamma(self):
        return float(self.Y[-1, -1])

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.Y, dtype=dtype)


@dataclass(frozen=True)
class ProjectionPoint:
    P: np.ndarray
    k: int

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise InvalidInput("projection matrix must be square")
        if not 0 <= self.k < P.shape[0] - 1:
            raise InvalidInput("need 0 <= k < n")
        object.__setattr__(self, "P", _frozen(P))

    @property
    def n(self):
        return self.P.shape[0] - 1

    @property
    def gamma(self):
        return float(self.P[-1, -1])

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.P, dtype=dtype)


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    residuals: dict = field(default_factory=dict)
    gamma: float = 0.0
    tolerances: dict = field(default_factory=dict)

    def failed(self):
        """Names of the residuals that exceed their tolerance."""
        return [name for name, r in self.residuals.items()
                if r > self.tolerances.get(name, np.inf)]


# -- construction ------------------------------------------------------------

def orthogonalize_affine(A_raw, b_raw):
    """Orthonormal basis of ``span(A_raw)`` and the displacement orthogonal to it.

    Parameters
    ----------
    A_raw : array_like, shape (n, k)
        Any basis of the linear part; must have rank k.
    b_raw : array_like, shape (n,)
        Any point of the flat.

    Returns
    -------
    OrthAffine
    """
    A_raw = np.asarray(A_raw, dtype=float)
    b_raw = np.asarray(b_raw, dtype=float).ravel()
    if A_raw.ndim == 1:
        A_raw = A_raw[:, None]
    n, k = A_raw.shape
    if b_raw.size != n:
        raise InvalidInput("b_raw must have n entries")
    if not 0 <= k < n:
        raise InvalidInput("need 0 <= k < n")
    if k == 0:
        return OrthAffine(np.zeros((n, 0)), b_raw)
    s = np.linalg.svd(A_raw, compute_uv=False)
    if s[0] <= numerics.ABS_FLOOR or s[-1] <= 1e-10 * s[0]:
        raise RankDeficient("A_raw does not have full column rank")
    A, _ = numerics.thin_qr_pos(A_raw)
    b0 = b_raw - A @ (A.T @ b_raw)
    return OrthAffine(A, b0)


def stiefel_from_affine(c):
    s = np.sqrt(1.0 + c.b0 @ c.b0)
    Y = np.zeros((c.n + 1, c.k + 1))
    Y[:c.n, :c.k] = c.A
    Y[:c.n, c.k] = c.b0 / s
    Y[c.n, c.k] = 1.0 / s
    return StiefelPoint(Y)


def projection_from_affine(c):
    beta = 1.0 + c.b0 @ c.b0
    n = c.n
    P = np.zeros((n + 1, n + 1))
    P[:n, :n] = c.A @ c.A.T + np.outer(c.b0, c.b0) / beta
    P[:n, n] = c.b0 / beta
    P[n, :n] = c.b0 / beta
    P[n, n] = 1.0 / beta
    return ProjectionPoint(P, c.k)


def affine_from_stiefel(Y):
    """Invert the Stiefel-coordinate map of a canonical point."""
    Ym = Y.Y
    n, k = Y.n, Y.k
    return OrthAffine(Ym[:n, :k], Ym[:n, k] / Ym[n, k])


def stiefel_to_projection(Y):
    Ym = np.asarray(Y, dtype=float)
    P = Ym @ Ym.T
    return ProjectionPoint(0.5 * (P + P.T), Ym.shape[1] - 1)


def _orthonormality_drift(Y):
    return float(np.max(np.abs(Y.T @ Y - np.eye(Y.shape[1])), initial=0.0))


def canonical_frame(Y_raw):
    """Canonical representative of ``span(Y_raw)`` and the rotation used.

    Returns ``(Y, Q)`` with ``Y = Y_raw' Q`` where ``Y_raw'`` is ``Y_raw``
    after an optional re-orthonormalization. Tangent vectors attached to
    ``Y_raw`` must be right-multiplied by the same ``Q``.
    """
    Y_raw = np.asarray(Y_raw, dtype=float)
    drift = _orthonormality_drift(Y_raw)
    if drift > ORTHO_REJECT:
        raise InvalidInput(f"columns are not orthonormal (drift {drift:.2e})")
    if drift > ORTHO_TOL:
        Y_raw, R = numerics.thin_qr_pos(Y_raw)
    v = Y_raw[-1, :]
    if np.linalg.norm(v) <= CANON_GAMMA:
        raise InfeasiblePoint("last row vanishes: subspace lies in R^n", raw=Y_raw)
    Q = numerics.householder_align(v)
    Y = Y_raw @ Q
    Y[-1, :-1] = 0.0
    return Y, Q


def canonicalize_stiefel(Y_raw):
    """Rotate an orthonormal (n+1) x (k+1) matrix into canonical block form."""
    Y, _ = canonical_frame(Y_raw)
    return StiefelPoint(Y)


def projection_to_stiefel(P):
    """Canonical Stiefel coordinates from the 1-eigenspace of a projector."""
    Pm = np.asarray(P, dtype=float)
    k = P.k if isinstance(P, ProjectionPoint) else None
    if Pm[-1, -1] < GAMMA_MIN:
        raise InfeasiblePoint("bottom-right entry of P vanishes", raw=Pm)
    lam, V = numerics.sym_eig(Pm)
    near = np.minimum(np.abs(lam), np.abs(lam - 1.0))
    if np.max(near) > EIG_CLUSTER_TOL:
        raise NotAProjection("eigenvalues are not clustered at 0 and 1")
    rank = int(np.sum(lam > 0.5))
    if k is not None and rank != k + 1:
        raise NotAProjection(f"rank {rank} does not match k + 1 = {k + 1}")
    return canonicalize_stiefel(V[:, -rank:])


# -- feasibility ---------------------------------------------------------------

def feasible_stiefel(Y_raw, gamma_min=GAMMA_MIN, tol=ORTHO_TOL):
    """Check whether a matrix is a valid set of Stiefel coordinates.

    Residuals are max-abs entries: ``orthonormality`` of ``Y^T Y - I``,
    ``block_form`` of the first k entries of the last row, and ``gamma``
    (how far ``|gamma|`` falls short of ``gamma_min``).
    """
    Y = np.asarray(Y_raw, dtype=float)
    scale = 1.0 + float(np.max(np.abs(Y), initial=0.0))
    gamma = float(Y[-1, -1]) if Y.size else 0.0
    residuals = {
        "orthonormality": _orthonormality_drift(Y),
        "block_form": float(np.max(np.abs(Y[-1, :-1]), initial=0.0)),
        "gamma": max(0.0, gamma_min - abs(gamma)),
    }
    tolerances = {"orthonormality": tol * scale, "block_form": tol * scale, "gamma": 0.0}
    ok = all(residuals[key] <= tolerances[key] for key in residuals)
    return FeasibilityReport(ok, residuals, gamma, tolerances)


def feasible_projection(P_raw, gamma_min=GAMMA_MIN, tol=ORTHO_TOL):
    """Check whether a matrix is a valid set of projection coordinates.

    With ``P = [[S, d], [d^T, gamma]]`` the reduced block ``S - d d^T / gamma``
    must itself be an orthogonal projector annihilating ``d``.
    """
    P = np.asarray(P_raw, dtype=float)
    scale = 1.0 + float(np.max(np.abs(P), initial=0.0))
    gamma = float(P[-1, -1])
    S, d = P[:-1, :-1], P[:-1, -1]
    residuals = {
        "symmetry": float(np.max(np.abs(P - P.T))),
        "idempotency": float(np.max(np.abs(P @ P - P))),
        "gamma": max(0.0, gamma_min - abs(gamma)),
    }
    if abs(gamma) >= gamma_min:
        R = S - np.outer(d, d) / gamma
        residuals["reduced_symmetry"] = float(np.max(np.abs(R - R.T), initial=0.0))
        residuals["reduced_idempotency"] = float(np.max(np.abs(R @ R - R), initial=0.0))
        residuals["reduced_annihilates_d"] = float(np.max(np.abs(R @ d), initial=0.0))
    else:
        for key in ("reduced_symmetry", "reduced_idempotency", "reduced_annihilates_d"):
            residuals[key] = np.inf
    # reduced block scales like 1/gamma
    rtol = tol * scale * max(1.0, 1.0 / max(abs(gamma), gamma_min))
    tolerances = {"symmetry": tol * scale, "idempotency": 10 * tol * scale, "gamma": 0.0,
                  "reduced_symmetry": rtol, "reduced_idempotency": 10 * rtol,
                  "reduced_annihilates_d": 10 * rtol}
    ok = all(residuals[key] <= tolerances[key] for key in residuals)
    return FeasibilityReport(ok, residuals, gamma, tolerances)


# -- sampling -------------------------------------------------------------------



def random_point(n, k, seed=None, max_retries=16):
    """Random point of Graff(k, n) from a standard-normal (n+1) x (k+1) matrix.

    ``seed`` may be an int (reproducible draw) or a ``numpy.random.Generator``.
    An infeasible draw (probability zero) is redrawn from the next substream.
    """
    if not 0 <= k < n:
        raise InvalidInput("need 0 <= k < n")
    shared = seed if isinstance(seed, np.random.Generator) else None
    if seed is None:
        shared = np.random.default_rng()
    for attempt in range(max_retries):
        rng = shared if shared is not None else np.random.default_rng([seed, attempt])
        Z = rng.standard_normal((n + 1, k + 1))
        Q, R = numerics.thin_qr_pos(Z)
        if np.min(np.abs(np.diag(R))) <= 1e-12:
            continue
        try:
            Y = canonicalize_stiefel(Q)
        except InfeasiblePoint:
            continue
        if feasible_stiefel(Y.Y).feasible:
            return Y
    raise InfeasiblePoint(f"no feasible draw after {max_retries} attempts")
