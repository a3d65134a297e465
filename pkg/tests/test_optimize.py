import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from graffopt import coords
from graffopt import geom_projection as gp
from graffopt import geom_stiefel as gs
from graffopt import optimize as opt
from graffopt import problems as pr
from graffopt.errors import InfeasiblePoint, LineSearchFailed, OracleInfeasible

# closed-form minimizer of -cos 2t - sin(2t)/2, see tests/oracles/derive_fixtures.py
T_STAR = 0.23182380450040305811
F_STAR = -1.1180339887498948482


def feasible_quadratic(n, k, seed):
    for attempt in range(16):
        inst = pr.quad_random(n, k, [seed, attempt])
        try:
            return inst, pr.quad_solution(inst)
        except OracleInfeasible:
            continue
    raise AssertionError("no feasible instance")


def near(Y, rng, radius):
    return gs.exp(Y, gs.random_tangent(Y, rng, radius), 1.0)


def test_line_search_matches_closed_form():
    inst = pr.QuadraticInstance.from_blocks([[1.0]], [0.5], -1.0, 0)
    o = pr.quad_oracle(inst)
    Y = np.array([[0.0], [1.0]])
    G = gs.rgrad(Y, o.euclid_grad(Y)).Delta
    assert np.allclose(G, [[1], [0]])
    t, f = opt.line_search_geodesic(o, Y, -G)
    assert abs(t - T_STAR) <= 1e-8
    assert abs(f - F_STAR) <= 1e-14
    assert f <= o.value(Y)


def test_line_search_rejects_zero_direction():
    o = pr.quad_oracle(pr.quad_random(2, 0, 0))
    with pytest.raises(LineSearchFailed):
        opt.line_search_geodesic(o, np.array([[0.0], [0], [1]]), np.zeros((3, 1)))


def test_line_search_nonfinite_objective():
    o = opt.ObjectiveOracle(lambda Y: np.nan, lambda Y: np.ones_like(Y))
    with pytest.raises(LineSearchFailed):
        opt.line_search_geodesic(o, np.array([[0.0], [1.0]]), np.array([[1.0], [0.0]]))


def test_stop_criteria_validation():
    with pytest.raises(ValueError):
        opt.StopCriteria(grad_tol=0)
    with pytest.raises(ValueError):
        opt.StopCriteria(max_iter=0)


@pytest.mark.parametrize("solver", [opt.sd_stiefel, opt.cg_stiefel, opt.newton_stiefel])
def test_start_at_minimizer(solver):
    inst = pr.QuadraticInstance(np.diag([4.0, 3, 2, 1]), 3, 1)
    sol = pr.quad_solution(inst)
    rep = solver(pr.quad_oracle(inst), sol.minimizer)
    assert rep.termination is opt.Termination.GRAD_TOL
    assert rep.iterations <= 1


@pytest.mark.parametrize("solver", [opt.sd_stiefel, opt.cg_stiefel])
def test_descent_converges(solver):
    inst, sol = feasible_quadratic(4, 1, 3)
    Y0 = coords.random_point(4, 1, 3)
    rep = solver(pr.quad_oracle(inst), Y0, opt.StopCriteria(max_iter=2000), reference=sol.minimizer)
    assert rep.termination in (opt.Termination.GRAD_TOL, opt.Termination.STEP_TOL)
    assert rep.records[-1].dist_to_solution <= 1e-6
    assert abs(rep.final_value - sol.opt_value) <= 1e-8
    fs = [r.f for r in rep.records]
    assert all(b <= a + 1e-12 * (1 + abs(a)) for a, b in zip(fs, fs[1:]))
    assert rep.records[0].iter == 0 and rep.records[0].step_t == 0.0
    assert rep.corrections == 0


def test_solvers_are_deterministic():
    inst, _ = feasible_quadratic(5, 2, 1)
    o = pr.quad_oracle(inst)
    Y0 = coords.random_point(5, 2, 1)
    a, b = opt.cg_stiefel(o, Y0), opt.cg_stiefel(o, Y0)
    assert [r.f for r in a.records] == [r.f for r in b.records]
    assert np.array_equal(a.point.Y, b.point.Y)


def test_max_iter_reported():
    inst, _ = feasible_quadratic(6, 3, 0)
    rep = opt.sd_stiefel(pr.quad_oracle(inst), coords.random_point(6, 3, 0), opt.StopCriteria(max_iter=2))
    assert rep.termination is opt.Termination.MAX_ITER
    assert rep.iterations == 2


@given(st.integers(0, 2**31))
def test_newton_direction_descends(seed):
    rng = np.random.default_rng(seed)
    inst, sol = feasible_quadratic(5, 2, seed)
    o = pr.quad_oracle(inst)
    Y = near(sol.minimizer, rng, 0.05)
    G = gs.rgrad(Y, o.euclid_grad(Y.Y)).Delta
    D, Hm = opt.newton_direction(o, Y.Y)
    lam = np.linalg.eigvalsh(Hm)
    if lam[0] > 0:
        assert D is not None and np.sum(D * G) < 0
    else:
        assert D is None


def test_newton_step_zero_at_critical_point():
    inst = pr.QuadraticInstance(np.diag([4.0, 3, 2, 1]), 3, 1)
    sol = pr.quad_solution(inst)
    D, _ = opt.newton_direction(pr.quad_oracle(inst), sol.minimizer.Y)
    assert np.linalg.norm(D) <= 1e-14


def test_newton_quadratic_convergence():
    rng = np.random.default_rng(4)
    inst, sol = feasible_quadratic(5, 2, 4)
    Y0 = near(sol.minimizer, rng, 0.09)
    rep = opt.newton_stiefel(pr.quad_oracle(inst), Y0, opt.StopCriteria(grad_tol=1e-10))
    assert rep.termination is opt.Termination.GRAD_TOL
    assert rep.iterations <= 10


def test_newton_falls_back_far_from_minimum():
    # at a maximizer the tangent Hessian is negative definite
    inst = pr.QuadraticInstance(np.diag([1.0, 2, 3, 4]) + 0.0, 3, 0)
    o = pr.quad_oracle(inst)
    Y = coords.canonicalize_stiefel(np.array([[0.01], [0.0], [0.0], [1.0]]) / np.sqrt(1.0001))
    rep = opt.newton_stiefel(o, Y, opt.StopCriteria(max_iter=3))
    assert rep.fallback_steps >= 1
    assert rep.records[-1].f < rep.records[0].f


def test_newton_needs_hessian():
    o = opt.ObjectiveOracle(lambda Y: 0.0, lambda Y: 0 * Y)
    with pytest.raises(ValueError):
        opt.newton_stiefel(o, coords.random_point(2, 0, 0))


def test_correct_feasible_stiefel():
    rng = np.random.default_rng(0)
    Y = coords.random_point(6, 2, 0)
    raw = Y.Y + 1e-7 * rng.standard_normal(Y.Y.shape)
    fixed = opt.correct_feasible(raw)
    assert coords.feasible_stiefel(fixed.Y).feasible
    assert gs.distance(fixed, Y)[0] <= 1e-6


def test_correct_feasible_projection():
    rng = np.random.default_rng(1)
    P = coords.stiefel_to_projection(coords.random_point(5, 1, 1)).P
    X = rng.standard_normal(P.shape)
    fixed = opt.correct_feasible(P + 1e-7 * X, "projection", 1)
    assert coords.feasible_projection(fixed.P).feasible
    assert np.linalg.norm(fixed.P - P) <= 1e-6


def test_correct_feasible_complement():
    with pytest.raises(InfeasiblePoint):
        opt.correct_feasible(np.array([[1.0, 0], [0, 1], [0, 0]]))
    with pytest.raises(InfeasiblePoint):
        opt.correct_feasible(np.diag([1.0, 0, 0]), "projection", 0)


def test_sd_projection_matches_stiefel():
    inst, sol = feasible_quadratic(5, 2, 2)
    Y0 = coords.random_point(5, 2, 2)
    a = opt.sd_stiefel(pr.quad_oracle(inst), Y0, opt.StopCriteria(max_iter=2000))
    b = opt.sd_projection(pr.quad_oracle(inst, "projection"), coords.stiefel_to_projection(Y0),
                          opt.StopCriteria(max_iter=2000))
    assert abs(a.final_value - b.final_value) <= 1e-8
    assert abs(b.final_value - sol.opt_value) <= 1e-8


def test_sd_projection_first_step_commutes():
    inst, _ = feasible_quadratic(4, 1, 5)
    Y0 = coords.random_point(4, 1, 5)
    stop = opt.StopCriteria(max_iter=1)
    a = opt.sd_stiefel(pr.quad_oracle(inst), Y0, stop)
    b = opt.sd_projection(pr.quad_oracle(inst, "projection"), coords.stiefel_to_projection(Y0), stop)
    assert np.allclose(coords.stiefel_to_projection(a.point).P, b.point.P, atol=1e-9)


def test_qr_retraction_preserves_projector():
    rng = np.random.default_rng(3)
    P = coords.stiefel_to_projection(coords.random_point(6, 2, 3))
    xi = gp.random_tangent_p(P, rng).Delta
    Om = gp.bracket(P.P, xi)
    for t in (1e-3, 0.1, 0.5):
        out = opt.qr_retraction(P, Om, t)
        assert np.linalg.norm(out @ out - out) <= 1e-9
        assert abs(np.trace(out) - 3) <= 1e-9
    h = 1e-6
    vel = (opt.qr_retraction(P, Om, h) - opt.qr_retraction(P, Om, -h)) / (2 * h)
    # Omega = [P, xi] is horizontal, so the curve starts with velocity xi
    assert np.allclose(vel, xi, atol=1e-8)


def test_newton_projection_converges():
    rng = np.random.default_rng(6)
    inst, sol = feasible_quadratic(4, 1, 6)
    Y0 = near(sol.minimizer, rng, 0.08)
    rep = opt.newton_projection(pr.quad_oracle(inst, "projection"), coords.stiefel_to_projection(Y0),
                                opt.StopCriteria(grad_tol=1e-10), reference=sol.minimizer)
    assert rep.termination is opt.Termination.GRAD_TOL
    assert rep.iterations <= 10
    assert rep.records[-1].dist_to_solution <= 1e-8
