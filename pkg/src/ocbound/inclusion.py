"""Probes of the relaxed velocity set of the shifted time-optimal system.

At a base point (t, y) the set collects the augmented velocities

    ( rho, rho * g(t, y) w ) / ( L(t, y, w) + beta ),   w in R^m, rho in [0, 1],

whose first component is the time slowdown and whose remainder is the state
velocity.  The set always contains the origin (rho = 0) and superlinear
growth of L makes it bounded; the module realizes it through its support
function and provides empirical checks of the velocity bounds and the
Lipschitz continuity constants used by the certificate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import problems
from .numerics import golden_section_max, unit_directions
from .problems import ProblemSpec


@dataclass
class InclusionProbe:
    t: float
    y: np.ndarray
    direction: np.ndarray       # (1+n,) unit vector
    support_value: float
    argmax_rho: float
    argmax_w: np.ndarray        # (m,)

    def velocity(self, spec: ProblemSpec, beta: float) -> tuple[float, np.ndarray]:
        return velocity(spec, beta, self.t, self.y, self.argmax_rho, self.argmax_w)


def velocity(spec: ProblemSpec, beta: float, t: float, y: np.ndarray,
             rho: float, w: np.ndarray) -> tuple[float, np.ndarray]:
    """Augmented velocity (v0, v) for the given parameters."""
    y = np.asarray(y, dtype=float).reshape(spec.dim_x)
    w = np.asarray(w, dtype=float).reshape(spec.dim_u)
    denom = float(spec.L(float(t), y, w)) + beta
    gmat = np.asarray(spec.g(float(t), y), dtype=float).reshape(spec.dim_x, spec.dim_u)
    return rho / denom, rho * (gmat @ w) / denom


def support_function(spec: ProblemSpec, beta: float, t: float, y: np.ndarray,
                     direction: np.ndarray, r_max: float = 50.0,
                     grid_n: int = 201, n_rays: int = 64,
                     refine: bool = True) -> InclusionProbe:
    """Support function of the velocity set in the given unit direction.

    The objective is linear in rho, so only rho in {0, 1} matters; for rho = 1
    the control is swept on a radial-angular grid of |w| <= r_max with
    golden-section refinement along the best ray.
    """
    y = np.asarray(y, dtype=float).reshape(spec.dim_x)
    direction = np.asarray(direction, dtype=float).reshape(1 + spec.dim_x)
    d0 = float(direction[0])
    dv = direction[1:]
    gmat = np.asarray(spec.g(float(t), y), dtype=float).reshape(spec.dim_x, spec.dim_u)
    coeff = gmat.T @ dv    # (m,), <dv, g w> = <coeff, w>

    rays = unit_directions(spec.dim_u, n_rays if spec.dim_u > 1 else 2, seed=7)
    radii = np.linspace(0.0, r_max, grid_n)

    def phi_batch(ray: np.ndarray) -> np.ndarray:
        w = ray[:, None] * radii[None, :]
        t_arr = np.full(radii.shape[0], float(t))
        y_arr = np.repeat(y[:, None], radii.shape[0], axis=1)
        denom = problems.cost_batch(spec, t_arr, y_arr, w) + beta
        return (d0 + coeff @ w) / denom

    best_val = -np.inf
    best_ray = rays[0]
    best_radius = 0.0
    for ray in rays:
        vals = phi_batch(ray)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val = float(vals[k])
            best_ray = ray
            best_radius = float(radii[k])

    if refine:
        def phi_scalar(r: float) -> float:
            w = best_ray * r
            denom = float(spec.L(float(t), y, w)) + beta
            return (d0 + float(coeff @ w)) / denom

        cell = radii[1] - radii[0]
        lo = max(0.0, best_radius - cell)
        hi = min(r_max, best_radius + cell)
        r_ref, v_ref = golden_section_max(phi_scalar, lo, hi)
        if v_ref > best_val:
            best_val, best_radius = v_ref, r_ref

    if best_val > 0.0:
        rho, w_best = 1.0, best_ray * best_radius
        support = best_val
    else:
        rho, w_best = 0.0, np.zeros(spec.dim_u)
        support = 0.0   # the origin is always a member
    return InclusionProbe(t=float(t), y=y, direction=direction,
                          support_value=float(support), argmax_rho=rho,
                          argmax_w=np.asarray(w_best, dtype=float))


def velocity_bound_margins(spec: ProblemSpec, beta: float,
                           probe: InclusionProbe) -> tuple[float, float]:
    """Slack of the two envelope bounds at the probe's maximizer.

    Both must be nonnegative: |v0| <= 1/(theta(|w|)+beta) and
    |v| <= c_g |w| / (theta(|w|)+beta).
    """
    v0, v = probe.velocity(spec, beta)
    r = float(np.linalg.norm(probe.argmax_w))
    denom = float(spec.theta(r)) + beta
    return (1.0 / denom - abs(v0),
            spec.c_g * r / denom - float(np.linalg.norm(v)))


@dataclass
class LipschitzReport:
    pairs: int
    worst_v0_ratio: float
    worst_v_ratio: float
    worst_pair: dict

    @property
    def passed(self) -> bool:
        return max(self.worst_v0_ratio, self.worst_v_ratio) <= 1.0 + 1e-6

    def to_dict(self) -> dict:
        return {"pairs": self.pairs, "worst_v0_ratio": self.worst_v0_ratio,
                "worst_v_ratio": self.worst_v_ratio, "worst_pair": self.worst_pair,
                "passed": self.passed}


def lipschitz_probe(spec: ProblemSpec, beta: float, eta: float,
                    pairs: list[tuple], w_cap: float = 10.0,
                    w_panel_n: int = 21) -> LipschitzReport:
    """Compare velocity differences across point pairs with the certified rates.

    For a fixed (rho, w) panel the slowdown difference is checked against
    (xi/beta) * dist and the velocity difference against
    (c_grad_g/beta + eta xi c_g) * dist, dist being |t1-t2| + |y1-y2|.
    """
    m = spec.dim_u
    rays = unit_directions(m, 2 if m == 1 else 16, seed=11)
    radii = np.linspace(0.0, w_cap, w_panel_n)[1:]    # w = 0 gives zero rows
    panel_w = np.concatenate([ray[None, :] * radii[:, None] for ray in rays])
    panel_rho = (0.5, 1.0)

    v0_rate = spec.xi / beta
    v_rate = spec.c_grad_g / beta + eta * spec.xi * spec.c_g

    worst_v0 = 0.0
    worst_v = 0.0
    worst_pair: dict = {}
    for (t1, y1), (t2, y2) in pairs:
        y1 = np.asarray(y1, dtype=float).reshape(spec.dim_x)
        y2 = np.asarray(y2, dtype=float).reshape(spec.dim_x)
        dist = abs(t1 - t2) + float(np.linalg.norm(y1 - y2))
        if dist == 0.0:
            continue
        for w in panel_w:
            d1 = float(spec.L(float(t1), y1, w)) + beta
            d2 = float(spec.L(float(t2), y2, w)) + beta
            g1 = np.asarray(spec.g(float(t1), y1), dtype=float).reshape(spec.dim_x, m) @ w
            g2 = np.asarray(spec.g(float(t2), y2), dtype=float).reshape(spec.dim_x, m) @ w
            for rho in panel_rho:
                r_v0 = abs(rho / d1 - rho / d2) / (v0_rate * dist)
                r_v = float(np.linalg.norm(rho * g1 / d1 - rho * g2 / d2)) / (v_rate * dist)
                if r_v0 > worst_v0 or r_v > worst_v:
                    worst_pair = {"t1": float(t1), "y1": y1.tolist(),
                                  "t2": float(t2), "y2": y2.tolist(),
                                  "w": w.tolist(), "rho": rho}
                worst_v0 = max(worst_v0, r_v0)
                worst_v = max(worst_v, r_v)
    return LipschitzReport(pairs=len(pairs), worst_v0_ratio=worst_v0,
                           worst_v_ratio=worst_v, worst_pair=worst_pair)
