import dataclasses

import numpy as np
import pytest

import ocbound as ob
from ocbound.reparam import TimeOptimalTrajectory
from ocbound.solver import _cost_nodes
from ocbound.numerics import trapezoid

from conftest import BUILTINS


def test_constant_cost_gives_identity_map(solutions):
    spec = ob.builtin("toy-quadratic")
    traj = ob.to_time_optimal(spec, solutions["toy-quadratic"], beta=0.0)
    assert traj.T == pytest.approx(1.0, abs=1e-12)
    assert np.abs(traj.t_of_tau - traj.tau).max() <= 1e-12
    assert np.abs(traj.y).max() == 0.0


def test_total_time_equals_cost(solutions):
    spec = ob.builtin("lq-tracking")
    sol = solutions["lq-tracking"]
    traj = ob.to_time_optimal(spec, sol, beta=0.0)
    assert abs(traj.T - sol.cost) / traj.T <= 1e-12


def test_total_time_equals_shifted_cost(solutions, certificates):
    for name in BUILTINS:
        spec = ob.builtin(name)
        sol = solutions[name]
        beta = certificates[name].beta
        traj = ob.to_time_optimal(spec, sol, beta)
        assert abs(traj.T - (sol.cost + beta)) / traj.T <= 1e-8


def test_time_grid_structure(trajectories):
    for traj in trajectories.values():
        assert traj.t_of_tau[0] == 0.0
        assert abs(traj.t_of_tau[-1] - 1.0) <= 1e-9
        assert np.all(np.diff(traj.t_of_tau) > 0.0)
        assert np.all(np.diff(traj.tau) > 0.0)


def test_round_trip_exact_for_constant_solution(solutions):
    spec = ob.builtin("toy-quadratic")
    sol = solutions["toy-quadratic"]
    traj = ob.to_time_optimal(spec, sol, beta=0.0)
    u, x = ob.from_time_optimal(spec, traj, n_nodes=sol.grid.shape[0] - 1)
    assert np.abs(u - sol.u).max() == 0.0
    assert np.abs(x - sol.x).max() == 0.0


def test_round_trip_error_small_and_shrinking(solutions, certificates):
    spec = ob.builtin("lq-tracking")
    sol = solutions["lq-tracking"]
    beta = certificates["lq-tracking"].beta
    n = sol.grid.shape[0] - 1
    errors = []
    for m in (n, 2 * n, 4 * n):
        traj = ob.to_time_optimal(spec, sol, beta, m_nodes=m)
        u, _ = ob.from_time_optimal(spec, traj, n_nodes=n)
        errors.append(np.abs(u - sol.u).max())
    assert errors[-1] <= 1e-4
    assert errors[0] > errors[1] > errors[2]


def test_cost_preserved_through_inverse(solutions, certificates):
    spec = ob.builtin("lq-tracking")
    sol = solutions["lq-tracking"]
    beta = certificates["lq-tracking"].beta
    traj = ob.to_time_optimal(spec, sol, beta)
    u, x = ob.from_time_optimal(spec, traj, n_nodes=sol.grid.shape[0] - 1)
    grid = np.linspace(0.0, 1.0, u.shape[0])
    recovered = trapezoid(_cost_nodes(spec, grid, x, u), grid[1] - grid[0])
    assert abs(recovered - (traj.T - beta)) <= 1e-6


def test_nonpositive_integrand_is_refused(solutions):
    spec = dataclasses.replace(ob.builtin("toy-quadratic"),
                               L=lambda t, x, u: -1.0 + 0.0 * u[0])
    with pytest.raises(ob.ReparamError, match="not positive"):
        ob.to_time_optimal(spec, solutions["toy-quadratic"], beta=0.0)


def test_negative_beta_rejected(solutions):
    with pytest.raises(ValueError, match="nonnegative"):
        ob.to_time_optimal(ob.builtin("toy-quadratic"),
                           solutions["toy-quadratic"], beta=-1.0)


def test_degenerate_arc_is_refused():
    spec = ob.builtin("toy-quadratic")
    tau = np.linspace(0.0, 2.0, 11)
    t_of_tau = np.minimum(tau, 1.0)  # flat tail: dt/dtau = 0
    traj = TimeOptimalTrajectory(tau=tau, t_of_tau=t_of_tau,
                                 y=np.zeros((11, 1)), w=np.zeros((11, 1)),
                                 T=2.0, beta=0.0)
    with pytest.raises(ob.ReparamError, match="degenerate arc"):
        ob.from_time_optimal(spec, traj)
