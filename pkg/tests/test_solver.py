import dataclasses

import numpy as np
import pytest

import ocbound as ob
from ocbound.numerics import trapezoid
from ocbound.solver import _cost_nodes, _trapezoid_weights

from conftest import BUILTINS, LQ_COST, LQ_U0, lq_u_star, lq_x_star


def test_zero_control_keeps_zero_state():
    for name in BUILTINS:
        spec = ob.builtin(name)
        x = ob.integrate_state(spec, np.zeros((101, spec.dim_u)))
        assert np.abs(x).max() == 0.0


def test_constant_control_unit_dynamics():
    spec = ob.builtin("toy-quadratic")
    x = ob.integrate_state(spec, np.ones((1001, 1)))
    assert abs(x[-1, 0] - 1.0) <= 1e-10


def test_constant_control_time_varying_dynamics():
    # the sine term integrates to zero over a full period
    spec = ob.builtin("lq-tv")
    x = ob.integrate_state(spec, np.ones((1001, 1)))
    assert abs(x[-1, 0] - 1.0) <= 1e-8


def test_dynamics_blow_up_reports_step():
    spec = dataclasses.replace(
        ob.builtin("toy-quadratic"),
        g=lambda t, x: np.array([[1.0 + x[0] ** 2]]),
        grad_g=lambda t, x: (np.zeros((1, 1)), np.array([[[2.0 * x[0]]]])))
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(ob.SolverError, match="dynamics blow-up at step"):
            ob.integrate_state(spec, 10.0 * np.ones((201, 1)))


def test_cost_gradient_at_zero_control_toy():
    spec = ob.builtin("toy-quadratic")
    cost, grad = ob.cost_and_gradient(spec, np.zeros((201, 1)))
    assert cost == pytest.approx(1.0, abs=1e-14)
    assert np.abs(grad).max() == 0.0


def test_cost_gradient_at_zero_control_tracking():
    # with x = 0 the adjoint integrates to lambda(t) = -(1 - t)
    spec = ob.builtin("lq-tracking")
    n = 400
    cost, grad = ob.cost_and_gradient(spec, np.zeros((n + 1, 1)))
    assert cost == pytest.approx(0.6, abs=1e-14)
    grid = np.linspace(0.0, 1.0, n + 1)
    expected = -(1.0 - grid)
    assert abs(grad[0, 0] + 1.0) <= 5e-3
    assert np.abs(grad[1:-1, 0] - expected[1:-1]).max() <= 1e-4


@pytest.mark.parametrize("name", BUILTINS)
def test_gradient_matches_finite_differences(name):
    spec = ob.builtin(name)
    rng = np.random.default_rng(8)
    n = 40
    grid = np.linspace(0.0, 1.0, n + 1)
    w = _trapezoid_weights(n + 1, 1.0 / n)
    for _ in range(3):
        u = rng.uniform(-1.0, 1.0, (n + 1, spec.dim_u))
        _, grad = ob.cost_and_gradient(spec, u)
        raw = w[:, None] * grad

        def cost_of(uv):
            x = ob.integrate_state(spec, uv)
            return trapezoid(_cost_nodes(spec, grid, x, uv), 1.0 / n)

        fd = np.zeros_like(u)
        eps = 1e-6
        for i in range(n + 1):
            for j in range(spec.dim_u):
                up = u.copy(); up[i, j] += eps
                um = u.copy(); um[i, j] -= eps
                fd[i, j] = (cost_of(up) - cost_of(um)) / (2.0 * eps)
        scale = np.abs(raw).max()
        assert np.abs(fd - raw).max() <= 1e-5 * scale
        assert np.linalg.norm(fd - raw) <= 1e-5 * np.linalg.norm(raw)


def test_solve_toy_zero_is_optimal(solutions):
    sol = solutions["toy-quadratic"]
    assert sol.converged
    assert sol.iterations == 0
    assert sol.cost == pytest.approx(1.0, abs=1e-14)
    assert np.abs(sol.u).max() == 0.0


def test_solve_tracking_matches_two_point_bvp(solutions):
    sol = solutions["lq-tracking"]
    assert sol.converged
    assert abs(sol.u[0, 0] - LQ_U0) <= 1e-3
    assert abs(sol.cost - LQ_COST) <= 1e-4
    # interior nodes against the closed-form control and state
    mid = slice(10, -10)
    assert np.abs(sol.u[mid, 0] - lq_u_star(sol.grid[mid])).max() <= 1e-4
    assert np.abs(sol.x[mid, 0] - lq_x_star(sol.grid[mid])).max() <= 1e-4


def test_cost_equals_trapezoid_of_nodes(solutions):
    for name in BUILTINS:
        spec = ob.builtin(name)
        sol = solutions[name]
        nodes = _cost_nodes(spec, sol.grid, sol.x, sol.u)
        assert sol.cost == pytest.approx(trapezoid(nodes, sol.grid[1] - sol.grid[0]),
                                         abs=1e-12)


def test_initial_state_is_origin(solutions):
    for sol in solutions.values():
        assert np.abs(sol.x[0]).max() == 0.0


def test_descent_across_iterations():
    spec = ob.builtin("lq-tracking")
    costs = [ob.solve(spec, ob.SolverOptions(n=100, max_iter=k)).cost
             for k in range(0, 8)]
    assert all(c2 <= c1 + 1e-15 for c1, c2 in zip(costs, costs[1:]))


def test_discretization_convergence():
    spec = ob.builtin("lq-tracking")
    c500 = ob.solve(spec, ob.SolverOptions(n=500)).cost
    c1000 = ob.solve(spec, ob.SolverOptions(n=1000)).cost
    assert abs(c500 - c1000) <= 1e-5


def test_solution_respects_certified_bounds(solutions, certificates):
    for name in BUILTINS:
        sol = solutions[name]
        cert = certificates[name]
        spec = ob.builtin(name)
        assert sol.max_control_norm <= cert.ell
        assert sol.control_l1() <= cert.c + 1e-6
        assert sol.max_state_norm <= spec.c_g * cert.c + 1e-6


def test_nonconvergence_sets_warning():
    sol = ob.solve(ob.builtin("lq-tracking"), ob.SolverOptions(n=100, max_iter=1))
    assert not sol.converged
    assert sol.warning is not None
