"""Problem data for control-affine Lagrange problems with a free endpoint.

A problem is the minimization of the integral of a running cost L(t, x, u)
over [0, 1] subject to xdot = g(t, x) u and x(0) = 0.  A ProblemSpec bundles
the cost, the control matrix g, exact first derivatives of both, a growth
witness theta with L(t, x, u) >= theta(|u|) > 0, and the declared constants
used by the certification pipeline:

  mu                strong-convexity modulus of L in u (two-point inequality)
  xi, delta         growth constants: |grad_{(t,x)} L| |g u| <= xi L + delta
  c_g, c_grad_g     uniform bounds on |g| and |grad_{(t,x)} g|

Constants are declared by the problem and verified by sampling in the
certificate module; they are never derived symbolically.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np


class EvaluationError(RuntimeError):
    """Raised when a problem callback produces a non-finite value."""


class UnknownProblemError(ValueError):
    """Raised when a registry lookup fails; the message lists valid names."""


class Structure(str, enum.Enum):
    """Structural class of the problem data, selecting the bound branch."""

    AUTONOMOUS = "autonomous"            # L = L(x, u), g = g(x)
    TIME_VARYING_G_ONLY = "time-varying-g"  # g = g(t), L free of t
    GENERAL = "general"                  # no certified bound available


@dataclass(frozen=True)
class Gradients:
    """First derivatives of the problem data at a single point."""

    L_t: float
    L_x: np.ndarray       # (n,)
    L_u: np.ndarray       # (m,)
    g_t: np.ndarray       # (n, m)
    g_x: np.ndarray       # (n, m, n), entry [i, j, k] = d g_ij / d x_k


@dataclass(frozen=True)
class ProblemSpec:
    """Immutable problem datum.  All callbacks must be pure.

    When ``vectorized`` is set, L, grad_L and theta additionally accept a
    trailing batch axis (t of shape (K,), x of shape (n, K), u of shape
    (m, K)) and broadcast; g and grad_g are always called point-wise.
    """

    name: str
    dim_x: int
    dim_u: int
    L: Callable
    grad_L: Callable
    g: Callable
    grad_g: Callable
    theta: Callable
    mu: float
    xi: float
    delta: float
    c_g: float
    c_grad_g: float
    structure: Structure
    vectorized: bool = False

    def evaluate(self, t: float, x: np.ndarray, u: np.ndarray):
        return evaluate(self, t, x, u)


def _check_dims(spec: ProblemSpec, x: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (spec.dim_x,):
        raise ValueError(
            f"state has shape {x.shape}, expected ({spec.dim_x},) for problem '{spec.name}'")
    if u.shape != (spec.dim_u,):
        raise ValueError(
            f"control has shape {u.shape}, expected ({spec.dim_u},) for problem '{spec.name}'")
    return x, u


def evaluate(spec: ProblemSpec, t: float, x: np.ndarray, u: np.ndarray):
    """Evaluate cost density, velocity g(t,x)u and all first derivatives.

    Returns (cost_density, velocity, Gradients).  Dimension mismatches raise
    ValueError; non-finite callback output raises EvaluationError with the
    offending location.
    """
    x, u = _check_dims(spec, x, u)
    t = float(t)
    cost = float(spec.L(t, x, u))
    gmat = np.asarray(spec.g(t, x), dtype=float).reshape(spec.dim_x, spec.dim_u)
    velocity = gmat @ u
    L_t, L_x, L_u = spec.grad_L(t, x, u)
    g_t, g_x = spec.grad_g(t, x)
    grads = Gradients(
        L_t=float(L_t),
        L_x=np.asarray(L_x, dtype=float).reshape(spec.dim_x),
        L_u=np.asarray(L_u, dtype=float).reshape(spec.dim_u),
        g_t=np.asarray(g_t, dtype=float).reshape(spec.dim_x, spec.dim_u),
        g_x=np.asarray(g_x, dtype=float).reshape(spec.dim_x, spec.dim_u, spec.dim_x),
    )
    for label, value in (("cost density", cost), ("velocity", velocity),
                         ("cost gradient", np.concatenate(([grads.L_t], grads.L_x, grads.L_u)))):
        if not np.all(np.isfinite(value)):
            raise EvaluationError(
                f"problem evaluation failure: non-finite {label} at t={t}, x={x.tolist()}, "
                f"u={u.tolist()} for problem '{spec.name}'")
    return cost, velocity, grads


# ---------------------------------------------------------------------------
# Batched evaluation helpers.  Grid sweeps go through these so that problems
# with array-aware callbacks are evaluated in bulk while arbitrary callbacks
# still work through a plain loop.
# ---------------------------------------------------------------------------

def cost_batch(spec: ProblemSpec, t: np.ndarray, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """L over a batch: t (K,), x (n, K), u (m, K) -> (K,)."""
    t = np.asarray(t, dtype=float)
    if spec.vectorized:
        return np.asarray(spec.L(t, x, u), dtype=float).reshape(t.shape)
    out = np.empty(t.shape[0])
    for k in range(t.shape[0]):
        out[k] = spec.L(float(t[k]), x[:, k], u[:, k])
    return out


def grad_u_batch(spec: ProblemSpec, t: np.ndarray, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Control gradient of L over a batch -> (m, K)."""
    t = np.asarray(t, dtype=float)
    if spec.vectorized:
        _, _, L_u = spec.grad_L(t, x, u)
        return np.asarray(L_u, dtype=float).reshape(spec.dim_u, t.shape[0])
    out = np.empty((spec.dim_u, t.shape[0]))
    for k in range(t.shape[0]):
        _, _, L_u = spec.grad_L(float(t[k]), x[:, k], u[:, k])
        out[:, k] = np.asarray(L_u, dtype=float).reshape(spec.dim_u)
    return out


def theta_batch(spec: ProblemSpec, r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if spec.vectorized:
        return np.asarray(spec.theta(r), dtype=float).reshape(r.shape)
    return np.array([float(spec.theta(float(rk))) for rk in r])


# ---------------------------------------------------------------------------
# Built-in registry
# ---------------------------------------------------------------------------

_OVERRIDABLE = ("mu", "xi", "delta", "c_g", "c_grad_g")


@dataclass(frozen=True)
class _Entry:
    defaults: dict
    build: Callable[[dict], ProblemSpec]
    summary: str = ""


def _scalar_problem(name, L, grad_L, g, grad_g, theta, params, structure):
    return ProblemSpec(
        name=name, dim_x=1, dim_u=1,
        L=L, grad_L=grad_L, g=g, grad_g=grad_g, theta=theta,
        mu=params["mu"], xi=params["xi"], delta=params["delta"],
        c_g=params["c_g"], c_grad_g=params["c_grad_g"],
        structure=structure, vectorized=True,
    )


def _build_toy_quadratic(params):
    def L(t, x, u):
        return 1.0 + 0.5 * u[0] ** 2

    def grad_L(t, x, u):
        zero = np.zeros_like(np.asarray(x[0], dtype=float))
        return 0.0 * np.asarray(t, dtype=float), np.stack([zero]), np.stack([u[0] + zero])

    def g(t, x):
        return np.array([[1.0]])

    def grad_g(t, x):
        return np.zeros((1, 1)), np.zeros((1, 1, 1))

    def theta(r):
        return 1.0 + 0.5 * np.asarray(r, dtype=float) ** 2

    return _scalar_problem("toy-quadratic", L, grad_L, g, grad_g, theta,
                           params, Structure.AUTONOMOUS)


def _build_lq_tracking(params):
    def L(t, x, u):
        return 0.1 + 0.5 * u[0] ** 2 + 0.5 * (x[0] - 1.0) ** 2

    def grad_L(t, x, u):
        zero = np.zeros_like(np.asarray(x[0], dtype=float))
        return 0.0 * np.asarray(t, dtype=float), np.stack([x[0] - 1.0]), np.stack([u[0] + zero])

    def g(t, x):
        return np.array([[1.0]])

    def grad_g(t, x):
        return np.zeros((1, 1)), np.zeros((1, 1, 1))

    def theta(r):
        return 0.1 + 0.5 * np.asarray(r, dtype=float) ** 2

    return _scalar_problem("lq-tracking", L, grad_L, g, grad_g, theta,
                           params, Structure.AUTONOMOUS)


def _build_sin_well(params):
    def L(t, x, u):
        return 2.0 + 0.5 * u[0] ** 2 + np.sin(x[0])

    def grad_L(t, x, u):
        zero = np.zeros_like(np.asarray(x[0], dtype=float))
        return 0.0 * np.asarray(t, dtype=float), np.stack([np.cos(x[0])]), np.stack([u[0] + zero])

    def g(t, x):
        return np.array([[1.0]])

    def grad_g(t, x):
        return np.zeros((1, 1)), np.zeros((1, 1, 1))

    def theta(r):
        return 1.0 + 0.5 * np.asarray(r, dtype=float) ** 2

    return _scalar_problem("sin-well", L, grad_L, g, grad_g, theta,
                           params, Structure.AUTONOMOUS)


def _build_lq_tv(params):
    def L(t, x, u):
        return 0.1 + 0.5 * u[0] ** 2 + 0.5 * (x[0] - 1.0) ** 2

    def grad_L(t, x, u):
        zero = np.zeros_like(np.asarray(x[0], dtype=float))
        return 0.0 * np.asarray(t, dtype=float), np.stack([x[0] - 1.0]), np.stack([u[0] + zero])

    def g(t, x):
        return np.array([[1.0 + 0.5 * np.sin(2.0 * np.pi * t)]])

    def grad_g(t, x):
        return (np.array([[np.pi * np.cos(2.0 * np.pi * t)]]),
                np.zeros((1, 1, 1)))

    def theta(r):
        return 0.1 + 0.5 * np.asarray(r, dtype=float) ** 2

    return _scalar_problem("lq-tv", L, grad_L, g, grad_g, theta,
                           params, Structure.TIME_VARYING_G_ONLY)


_REGISTRY: dict[str, _Entry] = {
    "toy-quadratic": _Entry(
        defaults=dict(mu=1.0, xi=1.0, delta=0.1, c_g=1.0, c_grad_g=0.0),
        build=_build_toy_quadratic,
        summary="L = 1 + u^2/2, unit dynamics; the zero control is optimal",
    ),
    "lq-tracking": _Entry(
        defaults=dict(mu=1.0, xi=1.0, delta=0.1, c_g=1.0, c_grad_g=0.0),
        build=_build_lq_tracking,
        summary="L = 0.1 + u^2/2 + (x-1)^2/2, unit dynamics; closed-form optimum",
    ),
    "sin-well": _Entry(
        defaults=dict(mu=1.0, xi=1.0, delta=0.1, c_g=1.0, c_grad_g=0.0),
        build=_build_sin_well,
        summary="L = 2 + u^2/2 + sin(x), unit dynamics; mildly nonconvex in x",
    ),
    "lq-tv": _Entry(
        defaults=dict(mu=1.0, xi=2.0, delta=0.5, c_g=1.5, c_grad_g=np.pi),
        build=_build_lq_tv,
        summary="tracking cost with g(t) = 1 + sin(2 pi t)/2; time-varying dynamics",
    ),
}


def available() -> list[str]:
    return sorted(_REGISTRY)


def describe(name: str) -> dict:
    entry = _REGISTRY[name]
    spec = entry.build(dict(entry.defaults))
    return {
        "name": name,
        "summary": entry.summary,
        "dim_x": spec.dim_x,
        "dim_u": spec.dim_u,
        "structure": spec.structure.value,
        "constants": dict(entry.defaults),
    }


def builtin(name: str, overrides: dict | None = None) -> ProblemSpec:
    """Build a registered problem, optionally overriding declared scalars.

    Only the declared constants (mu, xi, delta, c_g, c_grad_g) can be
    overridden; overridden values are re-verified by sampling downstream.
    """
    if name not in _REGISTRY:
        raise UnknownProblemError(
            f"unknown problem '{name}'; available: {', '.join(available())}")
    entry = _REGISTRY[name]
    params = dict(entry.defaults)
    for key, value in (overrides or {}).items():
        if key not in _OVERRIDABLE:
            raise UnknownProblemError(
                f"cannot override '{key}' for '{name}'; overridable: {', '.join(_OVERRIDABLE)}")
        params[key] = float(value)
    return entry.build(params)


# ---------------------------------------------------------------------------
# Config file support: plain "dotted.key = value" lines.
# ---------------------------------------------------------------------------

def parse_config(text: str) -> tuple[str | None, dict]:
    """Parse the key-value config format.

    Recognized keys are ``problem.name`` and ``problem.overrides.<param>``.
    Lines starting with '#' and blank lines are ignored.  Returns
    (name or None, overrides).
    """
    name = None
    overrides: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key == "problem.name":
            name = value
        elif key.startswith("problem.overrides."):
            param = key[len("problem.overrides."):]
            try:
                overrides[param] = float(value)
            except ValueError as exc:
                raise ValueError(f"config line {lineno}: {value!r} is not a number") from exc
        else:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
    return name, overrides


def load_config(path) -> tuple[str | None, dict]:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config(handle.read())
