import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from graffopt import coords
from graffopt import geom_stiefel as gs
from graffopt.errors import InfeasiblePoint, InvalidInput, NotAProjection, RankDeficient

S2 = 1 / np.sqrt(2)
dims = st.sampled_from([(0, 1), (1, 2), (2, 5), (3, 6), (7, 19)])


def test_orthogonalize_removes_linear_component():
    c = coords.orthogonalize_affine(np.array([[1.0], [0]]), np.array([3.0, 1]))
    assert np.allclose(c.A, [[1], [0]])
    assert np.allclose(c.b0, [0, 1])


def test_orthogonalize_rank_deficient():
    with pytest.raises((RankDeficient, InvalidInput)):
        coords.orthogonalize_affine(np.array([[1.0, 2], [2, 4]]), np.zeros(2))


def test_stiefel_line_in_plane():
    c = coords.OrthAffine(np.array([[1.0], [0]]), np.array([0.0, 1]))
    Y = coords.stiefel_from_affine(c)
    assert np.allclose(Y.Y, [[1, 0], [0, S2], [0, S2]])


def test_stiefel_point_on_line():
    c = coords.OrthAffine(np.zeros((1, 0)), np.array([1.0]))
    Y = coords.stiefel_from_affine(c)
    assert np.allclose(Y.Y, [[S2], [S2]])
    P = coords.stiefel_to_projection(Y)
    assert np.allclose(P.P, 0.5 * np.ones((2, 2)))


def test_projection_line_in_plane():
    c = coords.OrthAffine(np.array([[1.0], [0]]), np.array([0.0, 1]))
    P = coords.projection_from_affine(c)
    assert np.allclose(P.P, [[1, 0, 0], [0, .5, .5], [0, .5, .5]])
    assert coords.feasible_projection(P.P).feasible


def test_orthonormality_residual_reported():
    Y = np.array([[1.0, 0.1], [0, 0], [0, 1]])
    rep = coords.feasible_stiefel(Y)
    assert not rep.feasible
    assert rep.residuals["orthonormality"] == pytest.approx(0.1)
    assert "orthonormality" in rep.failed()


def test_zero_gamma_infeasible():
    Y = np.array([[1.0, 0], [0, 1], [0, 0]])
    rep = coords.feasible_stiefel(Y)
    assert not rep.feasible and "gamma" in rep.failed()
    with pytest.raises(InfeasiblePoint):
        coords.canonicalize_stiefel(Y)


def test_projection_zero_gamma_infeasible():
    P = np.diag([1.0, 0, 0])
    assert not coords.feasible_projection(P).feasible
    with pytest.raises(InfeasiblePoint):
        coords.projection_to_stiefel(coords.ProjectionPoint(P, 0))


def test_projection_to_stiefel_rejects_non_projector():
    P = np.diag([0.7, 0.0, 1.0])
    with pytest.raises(NotAProjection):
        coords.projection_to_stiefel(coords.ProjectionPoint(P, 1))


def test_nonorthonormal_frame_rejected():
    with pytest.raises(InvalidInput):
        coords.canonicalize_stiefel(np.array([[2.0], [1.0]]))


def test_canonical_frame_returns_rotation(rng):
    Z = np.linalg.qr(rng.standard_normal((6, 3)))[0]
    Y, Q = coords.canonical_frame(Z)
    assert np.allclose(Z @ Q, Y)
    assert np.allclose(Y[-1, :-1], 0) and Y[-1, -1] > 0


def test_random_point_seeded():
    a, b = coords.random_point(5, 2, 11), coords.random_point(5, 2, 11)
    assert np.array_equal(a.Y, b.Y)
    with pytest.raises(InvalidInput):
        coords.random_point(3, 3, 0)


@given(dims, st.integers(0, 2**31))
def test_affine_roundtrip(nk, seed):
    k, n = nk
    rng = np.random.default_rng(seed)
    A_raw = rng.standard_normal((n, k))
    b_raw = rng.standard_normal(n)
    c = coords.orthogonalize_affine(A_raw, b_raw)
    assert np.allclose(c.A.T @ c.b0, 0, atol=1e-12)
    Y = coords.stiefel_from_affine(c)
    assert coords.feasible_stiefel(Y.Y).feasible
    back = coords.affine_from_stiefel(Y)
    assert np.allclose(back.b0, c.b0, atol=1e-9 * (1 + np.linalg.norm(c.b0)))
    assert np.allclose(back.A @ back.A.T, c.A @ c.A.T, atol=1e-10)


@given(dims, st.integers(0, 2**31))
def test_stiefel_projection_roundtrip(nk, seed):
    k, n = nk
    Y = coords.random_point(n, k, seed)
    P = coords.stiefel_to_projection(Y)
    rep = coords.feasible_projection(P.P)
    assert rep.feasible, rep.residuals
    assert abs(np.trace(P.P) - (k + 1)) < 1e-10
    Y2 = coords.projection_to_stiefel(P)
    assert gs.distance(Y, Y2)[0] <= 1e-10 * max(1.0, 1.0 / Y.gamma)


@given(dims, st.integers(0, 2**31))
def test_projection_independent_of_representative(nk, seed):
    k, n = nk
    rng = np.random.default_rng(seed)
    Y = coords.random_point(n, k, rng)
    Q = np.linalg.qr(rng.standard_normal((k + 1, k + 1)))[0]
    P1 = coords.stiefel_to_projection(Y).P
    P2 = coords.stiefel_to_projection(Y.Y @ Q).P
    assert np.allclose(P1, P2, atol=1e-12)
    # the canonical form pins the displacement column; A is fixed up to O(k)
    Y2 = coords.canonicalize_stiefel(Y.Y @ Q)
    assert np.allclose(Y2.Y[:, -1], Y.Y[:, -1], atol=1e-10)
    assert np.allclose(Y2.Y @ Y2.Y.T, P1, atol=1e-10)
