"""Time reparameterization between the Lagrange and time-optimal forms.

The forward map integrates tau(t) = integral of L + beta along a solved
trajectory and resamples state and control on a uniform tau grid; the total
time T then equals the shifted cost.  The inverse map re-expresses a
time-optimal trajectory on the unit time interval.  Inversion uses monotone
linear interpolation throughout: strict monotonicity of the grids is then a
structural property rather than a numerical accident.  beta = 0 gives the
plain time-optimal form; beta > 0 the shifted variant used by the adjoint
verification.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import cumulative_trapezoid
from .problems import ProblemSpec
from .solver import ControlSolution


class ReparamError(RuntimeError):
    pass


@dataclass
class TimeOptimalTrajectory:
    tau: np.ndarray        # (M+1,) uniform grid on [0, T]
    t_of_tau: np.ndarray   # (M+1,) strictly increasing, 0 -> 1
    y: np.ndarray          # (M+1, n) state samples
    w: np.ndarray          # (M+1, m) control samples
    T: float
    beta: float


def _interp_columns(query: np.ndarray, knots: np.ndarray, values: np.ndarray) -> np.ndarray:
    out = np.empty((query.shape[0], values.shape[1]))
    for j in range(values.shape[1]):
        out[:, j] = np.interp(query, knots, values[:, j])
    return out


def to_time_optimal(spec: ProblemSpec, sol: ControlSolution, beta: float,
                    m_nodes: int | None = None) -> TimeOptimalTrajectory:
    """Reparameterize a solved trajectory by the running cost plus beta.

    tau(t) is the cumulative trapezoid of L + beta along the solution grid;
    its inverse is sampled on a uniform tau grid with m_nodes + 1 points
    (default: four per source interval).
    """
    if beta < 0.0:
        raise ValueError("beta must be nonnegative")
    grid = sol.grid
    h = grid[1] - grid[0]
    shifted = np.array([float(spec.L(float(grid[k]), sol.x[k], sol.u[k])) + beta
                        for k in range(grid.shape[0])])
    if np.any(shifted <= 0.0):
        raise ReparamError("reparameterization failed: L+beta not positive")
    tau_nodes = cumulative_trapezoid(shifted, h)
    if np.any(np.diff(tau_nodes) <= 0.0):
        raise ReparamError("reparameterization failed: L+beta not positive")
    T = float(tau_nodes[-1])

    if m_nodes is None:
        m_nodes = 4 * (grid.shape[0] - 1)
    tau = np.linspace(0.0, T, m_nodes + 1)
    t_of_tau = np.interp(tau, tau_nodes, grid)
    y = _interp_columns(t_of_tau, grid, sol.x)
    w = _interp_columns(t_of_tau, grid, sol.u)
    return TimeOptimalTrajectory(tau=tau, t_of_tau=t_of_tau, y=y, w=w,
                                 T=T, beta=float(beta))


def from_time_optimal(spec: ProblemSpec, traj: TimeOptimalTrajectory,
                      n_nodes: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Recover (control grid, state grid) on a uniform grid over [0, 1].

    Requires dt/dtau bounded away from zero at every node; trajectories with
    stationary arcs are refused rather than silently regularized.
    """
    slopes = np.diff(traj.t_of_tau) / np.diff(traj.tau)
    if np.any(slopes <= 1e-12):
        raise ReparamError("degenerate arc; inverse transform refused")
    if n_nodes is None:
        n_nodes = traj.tau.shape[0] - 1
    t_grid = np.linspace(0.0, 1.0, n_nodes + 1)
    tau_of_t = np.interp(t_grid, traj.t_of_tau, traj.tau)
    x = _interp_columns(tau_of_t, traj.tau, traj.y)
    u = _interp_columns(tau_of_t, traj.tau, traj.w)
    return u, x
