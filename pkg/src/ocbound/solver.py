"""Direct single-shooting solver for the free-endpoint Lagrange problem.

The control is parameterized by its values on a uniform grid over [0, 1]
(piecewise-linear reconstruction), the state is integrated with classical
RK4 (control interpolated linearly at half-steps), and the cost is the
composite trapezoid of L along the nodes.  The gradient is the exact
reverse-mode derivative of this discretization, normalized by the trapezoid
weights so that the reported values approximate the point-wise quantity
grad_u L + g^T lambda with the adjoint terminal condition lambda(1) = 0.
Since the endpoint is free, plain gradient descent with Armijo backtracking
is adequate and keeps the run bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import trapezoid
from .problems import ProblemSpec


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverOptions:
    n: int = 1000               # number of grid intervals
    tol: float = 1e-8           # max-norm threshold on the point-wise gradient
    max_iter: int = 10000
    armijo_c: float = 1e-4
    step_min: float = 1e-18


@dataclass
class ControlSolution:
    grid: np.ndarray            # (N+1,)
    u: np.ndarray               # (N+1, m)
    x: np.ndarray               # (N+1, n)
    cost: float
    grad_norm_final: float
    iterations: int
    converged: bool
    warning: str | None = None

    @property
    def max_control_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.u, axis=1)))

    @property
    def max_state_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.x, axis=1)))

    def control_l1(self) -> float:
        """Trapezoid quadrature of |u(t)| along the grid."""
        h = self.grid[1] - self.grid[0]
        return trapezoid(np.linalg.norm(self.u, axis=1), h)


def _as_control_grid(spec: ProblemSpec, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    if u.ndim != 2 or u.shape[1] != spec.dim_u:
        raise ValueError(f"control grid must have shape (N+1, {spec.dim_u})")
    return u


def _forward(spec: ProblemSpec, u: np.ndarray, keep_tape: bool):
    """Integrate the state; optionally keep per-stage data for the reverse sweep.

    Stage controls per step are (u_k, (u_k+u_{k+1})/2, (u_k+u_{k+1})/2, u_{k+1}),
    i.e. the piecewise-linear control sampled at the RK4 stage times.
    """
    n, m = spec.dim_x, spec.dim_u
    steps = u.shape[0] - 1
    h = 1.0 / steps
    x = np.zeros((steps + 1, n))
    tape = None
    if keep_tape:
        tape = {
            "x_stage": np.empty((steps, 4, n)),
            "u_stage": np.empty((steps, 4, m)),
            "t_stage": np.empty((steps, 4)),
            "g_stage": np.empty((steps, 4, n, m)),
        }
    xk = x[0]
    for k in range(steps):
        t0 = k * h
        tm = t0 + 0.5 * h
        t1 = t0 + h
        ua = u[k]
        ub = u[k + 1]
        um = 0.5 * (ua + ub)

        g1 = np.asarray(spec.g(t0, xk), dtype=float).reshape(n, m)
        s1 = g1 @ ua
        x1 = xk + 0.5 * h * s1
        g2 = np.asarray(spec.g(tm, x1), dtype=float).reshape(n, m)
        s2 = g2 @ um
        x2 = xk + 0.5 * h * s2
        g3 = np.asarray(spec.g(tm, x2), dtype=float).reshape(n, m)
        s3 = g3 @ um
        x3 = xk + h * s3
        g4 = np.asarray(spec.g(t1, x3), dtype=float).reshape(n, m)
        s4 = g4 @ ub

        xk = xk + (h / 6.0) * (s1 + 2.0 * s2 + 2.0 * s3 + s4)
        if not np.all(np.isfinite(xk)):
            raise SolverError(f"dynamics blow-up at step {k}")
        x[k + 1] = xk
        if keep_tape:
            tape["x_stage"][k] = (x[k], x1, x2, x3)
            tape["u_stage"][k] = (ua, um, um, ub)
            tape["t_stage"][k] = (t0, tm, tm, t1)
            tape["g_stage"][k] = (g1, g2, g3, g4)
    return x, tape


def integrate_state(spec: ProblemSpec, u) -> np.ndarray:
    """State trajectory from x(0) = 0 under the given control grid."""
    u = _as_control_grid(spec, u)
    x, _ = _forward(spec, u, keep_tape=False)
    return x


def _trapezoid_weights(nodes: int, h: float) -> np.ndarray:
    w = np.full(nodes, h)
    w[0] = w[-1] = 0.5 * h
    return w


def _cost_nodes(spec: ProblemSpec, grid, x, u) -> np.ndarray:
    return np.array([float(spec.L(float(grid[k]), x[k], u[k]))
                     for k in range(grid.shape[0])])


def cost_and_gradient(spec: ProblemSpec, u) -> tuple[float, np.ndarray]:
    """Cost of a control grid and its point-wise gradient.

    The raw derivative of the discrete cost with respect to the node values
    equals the returned gradient times the trapezoid weight of the node.
    """
    u = _as_control_grid(spec, u)
    x, tape = _forward(spec, u, keep_tape=True)
    grid = np.linspace(0.0, 1.0, u.shape[0])
    cost, grad_raw = _cost_and_raw_gradient(spec, grid, x, u, tape)
    h = grid[1] - grid[0]
    w = _trapezoid_weights(u.shape[0], h)
    return cost, grad_raw / w[:, None]


def _stage_jacobian(spec: ProblemSpec, t: float, x: np.ndarray, u_val: np.ndarray) -> np.ndarray:
    """d(g(t,x)u)/dx as an (n, n) matrix."""
    _, g_x = spec.grad_g(float(t), x)
    g_x = np.asarray(g_x, dtype=float).reshape(spec.dim_x, spec.dim_u, spec.dim_x)
    return np.einsum("ijk,j->ik", g_x, u_val)


def _cost_and_raw_gradient(spec: ProblemSpec, grid, x, u, tape):
    """Trapezoid cost and its exact derivative w.r.t. every control node."""
    nodes = grid.shape[0]
    steps = nodes - 1
    h = grid[1] - grid[0]
    w = _trapezoid_weights(nodes, h)

    L_nodes = np.empty(nodes)
    L_x = np.empty((nodes, spec.dim_x))
    L_u = np.empty((nodes, spec.dim_u))
    for k in range(nodes):
        L_nodes[k] = float(spec.L(float(grid[k]), x[k], u[k]))
        _, lx, lu = spec.grad_L(float(grid[k]), x[k], u[k])
        L_x[k] = np.asarray(lx, dtype=float).reshape(spec.dim_x)
        L_u[k] = np.asarray(lu, dtype=float).reshape(spec.dim_u)
    cost = trapezoid(L_nodes, h)

    grad = w[:, None] * L_u
    xbar = w[-1] * L_x[-1]
    for k in range(steps - 1, -1, -1):
        ts = tape["t_stage"][k]
        xs = tape["x_stage"][k]
        us = tape["u_stage"][k]
        gs = tape["g_stage"][k]
        A = [_stage_jacobian(spec, ts[s], xs[s], us[s]) for s in range(4)]

        c = (h / 6.0) * xbar
        sbar4 = c
        sbar3 = 2.0 * c + h * (A[3].T @ sbar4)
        sbar2 = 2.0 * c + 0.5 * h * (A[2].T @ sbar3)
        sbar1 = c + 0.5 * h * (A[1].T @ sbar2)

        mid = gs[1].T @ sbar2 + gs[2].T @ sbar3
        grad[k] += gs[0].T @ sbar1 + 0.5 * mid
        grad[k + 1] += 0.5 * mid + gs[3].T @ sbar4

        xbar = (xbar + A[0].T @ sbar1 + A[1].T @ sbar2 + A[2].T @ sbar3
                + A[3].T @ sbar4 + w[k] * L_x[k])
    return cost, grad


def solve(spec: ProblemSpec, options: SolverOptions = SolverOptions()) -> ControlSolution:
    """Gradient descent with Armijo backtracking from the zero control.

    Deterministic given the options.  Non-convergence is reported through
    the ``converged`` flag and a warning string rather than an exception.
    """
    steps = options.n
    grid = np.linspace(0.0, 1.0, steps + 1)
    h = grid[1] - grid[0]
    w = _trapezoid_weights(steps + 1, h)

    u = np.zeros((steps + 1, spec.dim_u))
    x, tape = _forward(spec, u, keep_tape=True)
    cost, grad_raw = _cost_and_raw_gradient(spec, grid, x, u, tape)

    warning = None
    iterations = 0
    alpha = 1.0
    while True:
        grad = grad_raw / w[:, None]
        gnorm = float(np.max(np.linalg.norm(grad, axis=1)))
        if gnorm <= options.tol:
            converged = True
            break
        if iterations >= options.max_iter:
            converged = False
            warning = f"no convergence in {options.max_iter} iterations (grad {gnorm:.3e})"
            break

        # directional derivative of the discrete cost along -grad
        slope = float(np.sum(w[:, None] * grad * grad))
        alpha = min(2.0 * alpha, 1e6)
        accepted = False
        while alpha >= options.step_min:
            u_try = u - alpha * grad
            try:
                x_try, tape_try = _forward(spec, u_try, keep_tape=True)
            except SolverError:
                alpha *= 0.5
                continue
            cost_try = trapezoid(_cost_nodes(spec, grid, x_try, u_try), h)
            if cost_try <= cost - options.armijo_c * alpha * slope:
                u, x, tape = u_try, x_try, tape_try
                cost, grad_raw = _cost_and_raw_gradient(spec, grid, x, u, tape)
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            converged = False
            warning = "line search stalled before reaching the gradient tolerance"
            break
        iterations += 1

    return ControlSolution(grid=grid, u=u, x=x, cost=float(cost),
                           grad_norm_final=gnorm, iterations=iterations,
                           converged=converged, warning=warning)
