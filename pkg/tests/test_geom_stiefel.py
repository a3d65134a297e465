import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from graffopt import coords
from graffopt import geom_stiefel as gs
from graffopt import problems as pr
from graffopt.errors import BasePointMismatch, GeodesicSingular, InfeasiblePoint

S2 = 1 / np.sqrt(2)
E1 = np.array([[1.0], [0.0]])
E2 = np.array([[0.0], [1.0]])
dims = st.sampled_from([(0, 1), (1, 2), (2, 5), (3, 6), (7, 19)])
seeds = st.integers(0, 2**31)


def point(n, k, seed):
    return coords.random_point(n, k, seed)


def test_tangent_project_hand():
    D = gs.tangent_project(E2, np.array([[1.0], [1.0]])).Delta
    assert np.allclose(D, E1)


def test_tangent_project_normal_and_idempotent(rng):
    Y = point(5, 2, 3)
    assert np.allclose(gs.tangent_project(Y, Y.Y @ rng.standard_normal((3, 3))).Delta, 0)
    D = gs.tangent_project(Y, rng.standard_normal((6, 3))).Delta
    assert np.allclose(gs.tangent_project(Y, D).Delta, D)
    assert np.allclose(Y.Y.T @ D, 0, atol=1e-12)


def test_metric_hand_values():
    Y = np.array([[1.0, 0], [0, 0], [0, 1]])
    a = gs.TangentStiefel(Y, np.array([[0.0, 0], [1, 0], [0, 0]]))
    b = gs.TangentStiefel(Y, np.array([[0.0, 0], [2, 0], [0, 0]]))
    c = gs.TangentStiefel(Y, np.array([[0.0, 0], [0, 1], [0, 0]]))
    assert gs.metric(a, b) == 2.0
    assert gs.metric(a, c) == 0.0
    assert gs.metric(b, b) == pytest.approx(np.linalg.norm(b.Delta) ** 2)


def test_metric_base_mismatch():
    a = gs.TangentStiefel(E2, E1)
    b = gs.TangentStiefel(np.array([[S2], [S2]]), np.array([[S2], [-S2]]))
    with pytest.raises(BasePointMismatch):
        gs.metric(a, b)


def test_exp_quarter_turn():
    Y = gs.exp(E2, E1, np.pi / 4)
    assert np.allclose(Y.Y, [[S2], [S2]])
    assert coords.affine_from_stiefel(Y).b0[0] == pytest.approx(1.0)


def test_exp_zero_time():
    Y = point(4, 1, 0)
    assert gs.exp(Y, np.zeros((5, 2)), 0.0) is Y


def test_exp_into_complement_raises():
    with pytest.raises(InfeasiblePoint) as info:
        gs.exp(E2, E1, np.pi / 2)
    assert info.value.raw is not None


def test_exp_full_period_returns():
    Y = point(3, 1, 4)
    H = gs.random_tangent(Y, np.random.default_rng(1)).Delta
    U, S, V = np.linalg.svd(H, full_matrices=False)
    H1 = np.outer(U[:, 0], V[0])      # single direction, sigma = 1
    assert gs.distance(gs.exp(Y, H1, np.pi), Y)[0] < 1e-7


def test_transport_quarter_turn_raw():
    geo = gs.GeodesicStiefel.from_tangent(E2, E1)
    assert np.allclose(geo.transport_raw(np.pi / 2, E1), -E2)


def test_transport_zero_time(rng):
    Y = point(4, 2, 1)
    D = gs.random_tangent(Y, rng).Delta
    assert np.array_equal(gs.transport(Y, D, 0.0, D).Delta, D)


def test_transport_velocity_matches_derivative(rng):
    Y = point(5, 2, 8)
    H = gs.random_tangent(Y, rng, 0.3)
    geo = gs.GeodesicStiefel.from_tangent(Y, H)
    t, h = 0.7, 1e-6
    fd = (geo.raw_at(t + h) - geo.raw_at(t - h)) / (2 * h)
    assert np.allclose(geo.transport_raw(t, H.Delta), fd, atol=1e-8)


def test_parallel_lines_distance():
    Y1 = np.array([[1.0, 0], [0, 0], [0, 1]])
    Y2 = np.array([[1.0, 0], [0, S2], [0, S2]])
    d, dec = gs.distance(Y1, Y2)
    assert d == pytest.approx(0.78539816339744830962, abs=1e-12)
    assert np.allclose(dec.theta, [0, np.pi / 4])
    geo = gs.geodesic_between(Y1, Y2)
    assert gs.distance(geo.at(1.0), Y2)[0] < 1e-10
    assert geo.speed == pytest.approx(np.pi / 4)


def test_points_on_line_distance():
    for n in (1, 3):
        c0 = coords.OrthAffine(np.zeros((n, 0)), np.zeros(n))
        e = np.zeros(n)
        e[0] = 1
        c1 = coords.OrthAffine(np.zeros((n, 0)), e)
        d, _ = gs.distance(coords.stiefel_from_affine(c0), coords.stiefel_from_affine(c1))
        assert d == pytest.approx(np.pi / 4)


def test_midpoint_of_zero_and_one():
    Y = pr.geodesic_midpoint(E2, np.array([[S2], [S2]]))
    b = coords.affine_from_stiefel(Y).b0[0]
    assert abs(b - 0.4142135623730950488) < 1e-10


def test_log_hand():
    D = gs.log(E2, np.array([[S2], [S2]])).Delta
    assert np.allclose(D, (np.pi / 4) * E1)


def test_log_self_is_zero():
    Y = point(5, 2, 5)
    assert np.allclose(gs.log(Y, Y).Delta, 0, atol=1e-12)


def test_geodesic_singular():
    Y1 = np.array([[0.0], [1.0]])
    Y2 = np.array([[1.0], [0.0]])
    with pytest.raises(GeodesicSingular):
        gs.geodesic_between(Y1, Y2)


def test_rgrad_normal_component_vanishes(rng):
    Y = point(4, 1, 2)
    assert np.allclose(gs.rgrad(Y, Y.Y @ rng.standard_normal((2, 2))).Delta, 0)


def test_rgrad_at_invariant_subspace_vanishes():
    inst = pr.QuadraticInstance(np.diag([4.0, 3, 2, 1]), 3, 1)
    sol = pr.quad_solution(inst)
    fY = 2 * inst.M @ sol.minimizer.Y
    assert np.allclose(gs.rgrad(sol.minimizer, fY).Delta, 0, atol=1e-14)


@given(dims, seeds)
def test_exp_log_roundtrip(nk, seed):
    k, n = nk
    rng = np.random.default_rng(seed)
    Y1, Y2 = coords.random_point(n, k, rng), coords.random_point(n, k, rng)
    D = gs.log(Y1, Y2)
    assert np.allclose(Y1.Y.T @ D.Delta, 0, atol=1e-10)
    d = gs.distance(Y1, Y2)[0]
    assert abs(D.norm() - d) <= 1e-10 * (1 + d)
    assert gs.distance(gs.exp(Y1, D, 1.0), Y2)[0] <= 1e-8


@given(dims, seeds)
def test_distance_metric_axioms(nk, seed):
    k, n = nk
    rng = np.random.default_rng(seed)
    A, B, C = (coords.random_point(n, k, rng) for _ in range(3))
    dab, dba = gs.distance(A, B)[0], gs.distance(B, A)[0]
    assert abs(dab - dba) <= 1e-12
    assert gs.distance(A, A)[0] <= 1e-10
    assert dab <= gs.distance(A, C)[0] + gs.distance(C, B)[0] + 1e-10
    Q = np.linalg.qr(rng.standard_normal((k + 1, k + 1)))[0]
    assert abs(gs.distance(A.Y @ Q, B)[0] - dab) <= 1e-10


@given(dims, seeds)
def test_transport_isometry_and_tangency(nk, seed):
    k, n = nk
    rng = np.random.default_rng(seed)
    Y = coords.random_point(n, k, rng)
    H = gs.random_tangent(Y, rng, rng.uniform(0.1, 1.0))
    D1, D2 = gs.random_tangent(Y, rng), gs.random_tangent(Y, rng)
    geo = gs.GeodesicStiefel.from_tangent(Y, H)
    t = rng.uniform(0, 1)
    T1, T2 = geo.transport_raw(t, D1), geo.transport_raw(t, D2)
    end = geo.raw_at(t)
    assert np.max(np.abs(end.T @ T1)) <= 1e-10
    assert abs(np.sum(T1 * T2) - gs.metric(D1, D2)) <= 1e-10
    # moving H along itself gives the geodesic velocity
    assert np.allclose(geo.transport_raw(t, H), geo.velocity_raw(t), atol=1e-10)


@given(dims, seeds)
def test_short_geodesic_length(nk, seed):
    k, n = nk
    rng = np.random.default_rng(seed)
    Y = coords.random_point(n, k, rng)
    H = gs.random_tangent(Y, rng)
    t = 0.05
    assert abs(gs.distance(Y, gs.exp(Y, H, t))[0] - t) <= 1e-8


def test_tangent_basis_orthonormal():
    Y = point(5, 2, 0)
    B = np.array([b.ravel() for b in gs.tangent_basis(Y)])
    assert B.shape[0] == 3 * 3
    assert np.allclose(B @ B.T, np.eye(9), atol=1e-12)
    for b in gs.tangent_basis(Y):
        assert np.allclose(Y.Y.T @ b, 0, atol=1e-12)
