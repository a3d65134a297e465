"""Dense factorizations with fixed conventions.

Every other module goes through these wrappers so that factor ordering and
signs are the same everywhere. Sign rule: the first entry of each left
factor column whose magnitude exceeds ``SIGN_TOL`` is made positive, and
the paired right factor column is flipped with it.
"""
import warnings
from typing import NamedTuple

import numpy as np

from .errors import InvalidInput, SingularMatrix, ZeroVector

SIGN_TOL = 1e-12
ABS_FLOOR = 1e-14


class CondensedSvd(NamedTuple):
    U: np.ndarray
    S: np.ndarray
    V: np.ndarray


class SymEig(NamedTuple):
    lam: np.ndarray
    V: np.ndarray


class QrPos(NamedTuple):
    Q: np.ndarray
    R: np.ndarray


def _as_finite(M, name="input"):
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise InvalidInput(f"{name} has non-finite entries")
    return M


def _column_signs(U):
    """+1/-1 per column so that the first non-negligible entry is positive."""
    signs = np.ones(U.shape[1])
    for j in range(U.shape[1]):
        col = U[:, j]
        big = np.flatnonzero(np.abs(col) > SIGN_TOL)
        if big.size and col[big[0]] < 0:
            signs[j] = -1.0
    return signs


def condensed_svd(M):
    """Thin SVD ``M = U diag(S) V^T`` with descending ``S`` and fixed signs.

    Parameters
    ----------
    M : array_like, shape (m, p)

    Returns
    -------
    CondensedSvd
        ``U`` is (m, r), ``S`` is (r,), ``V`` is (p, r) with ``r = min(m, p)``.
    """
    M = _as_finite(M, "matrix")
    if M.ndim != 2:
        raise InvalidInput("condensed_svd expects a 2-D array")
    U, S, Vt = np.linalg.svd(M, full_matrices=False)
    V = Vt.T
    signs = _column_signs(U)
    return CondensedSvd(U * signs, S, V * signs)


def sym_eig(S):
    """Eigen-decomposition of a symmetric matrix, eigenvalues ascending.

    Raises ``InvalidInput`` when ``S`` is visibly non-symmetric; small
    asymmetry is removed before factorizing.
    """
    S = _as_finite(S, "matrix")
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InvalidInput("sym_eig expects a square matrix")
    scale = np.linalg.norm(S)
    if np.linalg.norm(S - S.T) > 1e-10 * (1.0 + scale):
        raise InvalidInput("matrix is not symmetric")
    lam, V = np.linalg.eigh(0.5 * (S + S.T))
    return SymEig(lam, V * _column_signs(V))


def qr_pos(M):
    """QR factorization of a square invertible matrix with ``diag(R) > 0``."""
    M = _as_finite(M, "matrix")
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInput("qr_pos expects a square matrix")
    Q, R = np.linalg.qr(M)
    d = np.diag(R)
    dmax = np.max(np.abs(d)) if d.size else 0.0
    if d.size and (dmax <= ABS_FLOOR or np.min(np.abs(d)) <= 1e-14 * dmax):
        raise SingularMatrix("matrix is numerically singular")
    signs = np.where(d < 0, -1.0, 1.0)
    Q = Q * signs
    R = signs[:, None] * R
    if d.size:
        cond = dmax / np.min(np.abs(d))
        if cond > 1e12:
            warnings.warn(f"qr_pos: ill-conditioned input (diag ratio {cond:.2e})",
                          RuntimeWarning, stacklevel=2)
    return QrPos(Q, R)


def thin_qr_pos(M):
    """Thin QR of a tall matrix with non-negative ``diag(R)``; used for orthonormalizing."""
    Q, R = np.linalg.qr(np.asarray(M, dtype=float))
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    return Q * signs, signs[:, None] * R


def householder_align(v):
    """Orthogonal ``Q`` with ``Q^T v = |v| e_last``.

    A single Householder reflector; the identity when ``v`` already points
    along the last axis.
    """
    v = _as_finite(v, "vector").ravel()
    nv = np.linalg.norm(v)
    if nv <= ABS_FLOOR:
        raise ZeroVector("cannot align a zero vector")
    m = v.size
    w = v.copy()
    # w = v - |v| e_last, with the last entry formed without cancellation
    head = np.dot(v[:-1], v[:-1])
    if v[-1] > 0:
        w[-1] = -head / (v[-1] + nv)
    else:
        w[-1] = v[-1] - nv
    ww = np.dot(w, w)
    if ww <= (ABS_FLOOR * nv) ** 2:
        return np.eye(m)
    return np.eye(m) - (2.0 / ww) * np.outer(w, w)


def solve_dense(A, b):
    """Solve ``A x = b``; raises ``SingularMatrix`` instead of returning garbage."""
    A = _as_finite(A, "matrix")
    b = _as_finite(b, "rhs")
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInput("solve_dense expects a square matrix")
    if A.shape[0] == 0:
        return np.zeros(0)
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] <= ABS_FLOOR or s[-1] <= 1e-14 * s[0]:
        raise SingularMatrix("linear system is numerically singular")
    try:
        return np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(str(exc)) from exc
