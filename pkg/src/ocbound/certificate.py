"""Constants pipeline producing a certified sup-norm bound on the optimal control.

The chain, computed from problem data alone (no trajectory is needed):

  r0        threshold past which theta(r)/r >= 1
  c         r0 + integral of L(t, 0, 0) over [0, 1]
  R_omega   c_g * c, radius of the state ball; Omega = [0,1] x R_omega-ball
  lambda0   max of L(t, x, 0) over Omega
  lambda1   max of |grad_u L(t, x, 0)| over Omega
  sigma(r)  max of <grad_u L, u> - L over Omega x {|u| <= r}
  T0, beta  largest grid T0 in (0,1) with beta = sigma((c+1)/T0) > delta/xi
  eta       sup of r / (theta(r) + beta)            (time-varying-g branch)
  gamma     ((c_grad_g + c_g xi)/(c_g xi)) * exp(c_g eta xi (lambda0 + beta))
  ell       the final bound, by the branch matching the problem structure

Maxima are grid maxima with one golden-section refinement pass per axis, so
the certificate is numerical (resolutions are recorded), not interval-verified.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import problems
from .numerics import composite_simpson, golden_section_max, halton_points, ball_from_unit
from .problems import ProblemSpec, Structure

MARGIN_TOL = 1e-9

THEOREM_AUTONOMOUS = "theorem-1"      # bound branch for autonomous problems
THEOREM_TIME_VARYING = "theorem-2"    # bound branch for g = g(t)


class CertificationError(RuntimeError):
    """Raised when no certificate can be produced from the problem data."""


@dataclass(frozen=True)
class GridOptions:
    """Resolutions for the certificate sweeps (all deterministic)."""

    omega_grid_n: int = 401     # per axis, lambda0 / lambda1 sweeps over (t, x)
    sigma_grid_n: int = 61      # per axis, sigma sweeps over (t, x, u)
    r0_grid_n: int = 2000
    r0_max: float = 1e3
    quad_panels: int = 1000     # composite Simpson panels for the cost integral
    t0_margin: float = 1e-9
    eta_grid_n: int = 1201
    eta_r_max: float = 1e6
    refine: bool = True

    def meta(self) -> dict:
        return {
            "omega_grid_n": self.omega_grid_n,
            "sigma_grid_n": self.sigma_grid_n,
            "r0_grid_n": self.r0_grid_n,
            "r0_max": self.r0_max,
            "quad_panels": self.quad_panels,
            "eta_grid_n": self.eta_grid_n,
            "eta_r_max": self.eta_r_max,
            "refine": self.refine,
        }


@dataclass(frozen=True)
class ConditionResult:
    condition: str
    passed: bool
    margin: float
    worst: dict

    def to_dict(self) -> dict:
        return {"condition": self.condition, "passed": self.passed,
                "margin": self.margin, "worst": self.worst}


@dataclass(frozen=True)
class ConditionReport:
    samples: int
    u_cap: float
    seed: int
    results: tuple[ConditionResult, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def result(self, condition: str) -> ConditionResult:
        for r in self.results:
            if r.condition == condition:
                return r
        raise KeyError(condition)

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "u_cap": self.u_cap,
            "seed": self.seed,
            "passed": self.passed,
            "conditions": [r.to_dict() for r in self.results],
        }


@dataclass(frozen=True)
class Certificate:
    """Computed constants plus the final bound and its provenance."""

    problem: str
    overrides: dict = field(default_factory=dict)
    r0: float | None = None
    c: float | None = None
    R_omega: float | None = None
    lambda0: float | None = None
    lambda1: float | None = None
    T0: float | None = None
    beta: float | None = None
    eta: float | None = None
    gamma: float | None = None
    ell: float | None = None
    theorem_used: str | None = None
    condition_report: ConditionReport | None = None
    grid_meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "problem": {"name": self.problem, "overrides": dict(self.overrides)},
            "r0": self.r0,
            "c": self.c,
            "R_omega": self.R_omega,
            "lambda0": self.lambda0,
            "lambda1": self.lambda1,
            "T0": self.T0,
            "beta": self.beta,
            "eta": self.eta,
            "gamma": self.gamma,
            "ell": self.ell,
            "theorem_used": self.theorem_used,
            "condition_report": (self.condition_report.to_dict()
                                 if self.condition_report is not None else None),
            "grid_meta": dict(self.grid_meta),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Certificate":
        report = None
        raw = data.get("condition_report")
        if raw is not None:
            report = ConditionReport(
                samples=raw["samples"], u_cap=raw["u_cap"], seed=raw["seed"],
                results=tuple(ConditionResult(condition=r["condition"], passed=r["passed"],
                                              margin=r["margin"], worst=r["worst"])
                              for r in raw["conditions"]))
        return cls(
            problem=data["problem"]["name"],
            overrides=dict(data["problem"].get("overrides", {})),
            r0=data.get("r0"), c=data.get("c"), R_omega=data.get("R_omega"),
            lambda0=data.get("lambda0"), lambda1=data.get("lambda1"),
            T0=data.get("T0"), beta=data.get("beta"),
            eta=data.get("eta"), gamma=data.get("gamma"), ell=data.get("ell"),
            theorem_used=data.get("theorem_used"),
            condition_report=report,
            grid_meta=dict(data.get("grid_meta", {})),
        )


# ---------------------------------------------------------------------------
# Grid maximization over [0,1] x {|x| <= Rx} ( x {|u| <= Ru} )
# ---------------------------------------------------------------------------

_CHUNK = 1 << 19


def _grid_max(spec: ProblemSpec, f_batch, f_scalar, t_n: int, x_radius: float,
              x_n: int, u_radius: float | None, u_n: int, refine: bool):
    """Maximize f over the time-state(-control) box-ball product.

    f_batch(t (K,), x (n,K), u (m,K)) -> (K,); f_scalar(t, x, u) -> float.
    When u_radius is None the control is pinned to zero.  Returns
    (value, t, x, u) after one golden-section refinement pass per axis.
    """
    n, m = spec.dim_x, spec.dim_u
    axes = [np.linspace(0.0, 1.0, t_n)]
    axes += [np.linspace(-x_radius, x_radius, x_n) for _ in range(n)]
    with_u = u_radius is not None and u_radius > 0.0
    if with_u:
        axes += [np.linspace(-u_radius, u_radius, u_n) for _ in range(m)]
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = [g.ravel() for g in mesh]
    t_flat = flat[0]
    x_flat = np.stack(flat[1:1 + n])
    if with_u:
        u_flat = np.stack(flat[1 + n:1 + n + m])
    else:
        u_flat = np.zeros((m, t_flat.shape[0]))

    keep = np.einsum("ik,ik->k", x_flat, x_flat) <= x_radius ** 2 * (1.0 + 1e-12)
    if with_u:
        keep &= np.einsum("ik,ik->k", u_flat, u_flat) <= u_radius ** 2 * (1.0 + 1e-12)
    t_flat, x_flat, u_flat = t_flat[keep], x_flat[:, keep], u_flat[:, keep]

    best_val = -np.inf
    best_idx = 0
    for start in range(0, t_flat.shape[0], _CHUNK):
        sl = slice(start, start + _CHUNK)
        vals = f_batch(t_flat[sl], x_flat[:, sl], u_flat[:, sl])
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val = float(vals[k])
            best_idx = start + k
    t_best = float(t_flat[best_idx])
    x_best = x_flat[:, best_idx].copy()
    u_best = u_flat[:, best_idx].copy()

    if not refine:
        return best_val, t_best, x_best, u_best

    t_cell = 1.0 / (t_n - 1)
    x_cell = 2.0 * x_radius / (x_n - 1)
    u_cell = 2.0 * u_radius / (u_n - 1) if with_u else 0.0

    def refine_axis(value, lo, hi, apply):
        lo, hi = min(lo, hi), max(lo, hi)
        if hi - lo <= 0.0:
            return value
        xr, fr = golden_section_max(apply, lo, hi)
        if fr > value:
            apply(xr)  # leave the coordinate at the refined position
            return fr
        return value

    def set_t(v):
        nonlocal t_best
        t_best = v
        return f_scalar(t_best, x_best, u_best)

    best_val = refine_axis(best_val, max(0.0, t_best - t_cell),
                           min(1.0, t_best + t_cell), set_t)

    for i in range(n):
        other = float(np.sum(x_best ** 2) - x_best[i] ** 2)
        limit = np.sqrt(max(x_radius ** 2 - other, 0.0))

        def set_x(v, i=i):
            x_best[i] = v
            return f_scalar(t_best, x_best, u_best)

        best_val = refine_axis(best_val, max(-limit, x_best[i] - x_cell),
                               min(limit, x_best[i] + x_cell), set_x)

    if with_u:
        for i in range(m):
            other = float(np.sum(u_best ** 2) - u_best[i] ** 2)
            limit = np.sqrt(max(u_radius ** 2 - other, 0.0))

            def set_u(v, i=i):
                u_best[i] = v
                return f_scalar(t_best, x_best, u_best)

            best_val = refine_axis(best_val, max(-limit, u_best[i] - u_cell),
                                   min(limit, u_best[i] + u_cell), set_u)

    return best_val, t_best, x_best, u_best


# ---------------------------------------------------------------------------
# Pipeline stages
# ---------------------------------------------------------------------------

def find_r0(spec: ProblemSpec, r_max: float = 1e3, grid_n: int = 2000) -> float:
    """Smallest r (floored at 1e-6) with theta(s)/s >= 1 for all s in [r, r_max].

    A grid scan locates the last failing point and bisection pins the
    boundary; the floor keeps the threshold strictly positive when the ratio
    condition holds everywhere.
    """
    grid = np.linspace(0.0, r_max, grid_n + 1)
    theta_vals = problems.theta_batch(spec, grid)
    with np.errstate(divide="ignore"):
        ratio = np.where(grid > 0.0, theta_vals / np.maximum(grid, 1e-300), np.inf)
    ok = ratio >= 1.0
    if not ok[-1]:
        raise CertificationError(
            f"growth witness too weak on probe range: theta(r)/r < 1 at r = {r_max}")
    failing = np.nonzero(~ok)[0]
    if failing.size == 0:
        return 1e-6
    lo = float(grid[failing[-1]])       # fails
    hi = float(grid[failing[-1] + 1])   # passes, and so does every later node
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if float(spec.theta(mid)) / mid >= 1.0:
            hi = mid
        else:
            lo = mid
    return max(hi, 1e-6)


def _cost_along_zero(spec: ProblemSpec, panels: int) -> float:
    nodes = np.linspace(0.0, 1.0, 2 * panels + 1)
    x0 = np.zeros((spec.dim_x, nodes.shape[0]))
    u0 = np.zeros((spec.dim_u, nodes.shape[0]))
    vals = problems.cost_batch(spec, nodes, x0, u0)
    return composite_simpson(vals, nodes[1] - nodes[0])


def compute_constants(spec: ProblemSpec, opts: GridOptions = GridOptions(),
                      overrides: dict | None = None) -> Certificate:
    """First half of the pipeline: r0, c, R_omega, lambda0, lambda1."""
    r0 = find_r0(spec, r_max=opts.r0_max, grid_n=opts.r0_grid_n)
    c = r0 + _cost_along_zero(spec, opts.quad_panels)
    R = spec.c_g * c

    def L_batch(t, x, u):
        return problems.cost_batch(spec, t, x, u)

    def L_scalar(t, x, u):
        return float(spec.L(float(t), x, u))

    lambda0, *_ = _grid_max(spec, L_batch, L_scalar, opts.omega_grid_n, R,
                            opts.omega_grid_n, None, 0, opts.refine)

    def Lu_batch(t, x, u):
        gu = problems.grad_u_batch(spec, t, x, u)
        return np.sqrt(np.einsum("ik,ik->k", gu, gu))

    def Lu_scalar(t, x, u):
        _, _, L_u = spec.grad_L(float(t), x, u)
        return float(np.linalg.norm(np.asarray(L_u, dtype=float).reshape(spec.dim_u)))

    lambda1, *_ = _grid_max(spec, Lu_batch, Lu_scalar, opts.omega_grid_n, R,
                            opts.omega_grid_n, None, 0, opts.refine)

    if not np.isfinite(lambda0) or not np.isfinite(lambda1):
        raise CertificationError("non-finite cost data on the state ball")

    return Certificate(problem=spec.name, overrides=dict(overrides or {}),
                       r0=r0, c=c, R_omega=R, lambda0=lambda0,
                       lambda1=max(lambda1, 0.0), grid_meta=opts.meta())


def sigma(spec: ProblemSpec, cert: Certificate, r: float,
          opts: GridOptions = GridOptions()) -> float:
    """Grid maximum of <grad_u L, u> - L over Omega x {|u| <= r}."""
    if r < 0.0:
        raise ValueError("sigma is defined for r >= 0")
    R = cert.R_omega

    def obj_batch(t, x, u):
        gu = problems.grad_u_batch(spec, t, x, u)
        return np.einsum("ik,ik->k", gu, u) - problems.cost_batch(spec, t, x, u)

    def obj_scalar(t, x, u):
        _, _, L_u = spec.grad_L(float(t), x, u)
        L_u = np.asarray(L_u, dtype=float).reshape(spec.dim_u)
        return float(L_u @ u - spec.L(float(t), x, u))

    u_radius = None if r == 0.0 else float(r)
    value, *_ = _grid_max(spec, obj_batch, obj_scalar, opts.sigma_grid_n, R,
                          opts.sigma_grid_n, u_radius, opts.sigma_grid_n, opts.refine)
    return value


def sigma_inverse(spec: ProblemSpec, cert: Certificate, target: float,
                  opts: GridOptions = GridOptions(), tol: float = 1e-8) -> float:
    """Smallest r with sigma(r) >= target, by bisection on the nondecreasing map."""
    lo = 0.0
    if sigma(spec, cert, 0.0, opts) >= target:
        return 0.0
    hi = max(1.0, (cert.c or 1.0) + 1.0)
    while sigma(spec, cert, hi, opts) < target:
        hi *= 2.0
        if hi > opts.r0_max:
            raise CertificationError(
                f"sigma bisection bracket not found below r = {opts.r0_max}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if sigma(spec, cert, mid, opts) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def choose_T0(spec: ProblemSpec, cert: Certificate,
              opts: GridOptions = GridOptions()) -> tuple[float, float]:
    """Largest T0 on {0.01, ..., 0.99} with sigma((c+1)/T0) > delta/xi.

    Larger T0 means a smaller beta and hence a tighter final bound, so the
    scan starts from 0.99 and stops at the first admissible point.
    """
    threshold = spec.delta / spec.xi
    for k in range(99, 0, -1):
        T0 = k / 100.0
        beta = sigma(spec, cert, (cert.c + 1.0) / T0, opts)
        if beta > threshold + opts.t0_margin:
            return T0, beta
    raise CertificationError(
        "cannot certify: beta > delta/xi unattainable on the T0 grid")


def compute_eta(spec: ProblemSpec, beta: float,
                opts: GridOptions = GridOptions()) -> float:
    """Supremum of r / (theta(r) + beta) over r >= 0.

    Evaluated on {0} plus a log-spaced grid with golden-section refinement
    around the best point; the tail value at the probe limit must sit below
    the maximum, otherwise the supremum may not be attained in range.
    """
    grid = np.concatenate(([0.0], np.logspace(-6.0, np.log10(opts.eta_r_max),
                                              opts.eta_grid_n)))
    vals = grid / (problems.theta_batch(spec, grid) + beta)
    idx = int(np.argmax(vals))
    best = float(vals[idx])
    if opts.refine and 0 < idx < grid.shape[0] - 1:
        def f(r):
            return r / (float(spec.theta(r)) + beta)
        _, best = golden_section_max(f, float(grid[idx - 1]), float(grid[idx + 1]))
    if float(vals[-1]) >= best - MARGIN_TOL:
        raise CertificationError(
            "eta supremum not attained on probe range; growth witness tail too weak")
    return best


def compute_bound(spec: ProblemSpec, cert: Certificate,
                  opts: GridOptions = GridOptions()) -> Certificate:
    """Final bound ell by the branch matching the problem structure."""
    if cert.beta is None:
        raise ValueError("compute_bound needs beta; run choose_T0 first")
    mu, lambda0, lambda1, beta = spec.mu, cert.lambda0, cert.lambda1, cert.beta
    convex_branch = 0.5 * (lambda1 + np.sqrt(lambda1 ** 2 + 4.0 * mu * lambda0))
    if spec.structure is Structure.AUTONOMOUS:
        ell = max(np.sqrt(2.0 / mu * (lambda0 + beta)), convex_branch)
        return dataclasses.replace(cert, eta=None, gamma=None, ell=float(ell),
                                   theorem_used=THEOREM_AUTONOMOUS)
    if spec.structure is Structure.TIME_VARYING_G_ONLY:
        eta = compute_eta(spec, beta, opts)
        gamma = ((spec.c_grad_g + spec.c_g * spec.xi) / (spec.c_g * spec.xi)
                 * np.exp(spec.c_g * eta * spec.xi * (lambda0 + beta)))
        ell = max(np.sqrt(2.0 / mu * (lambda0 + beta) * (1.0 + gamma * spec.xi)),
                  convex_branch)
        return dataclasses.replace(cert, eta=float(eta), gamma=float(gamma),
                                   ell=float(ell), theorem_used=THEOREM_TIME_VARYING)
    raise CertificationError(
        f"no certified bound for structure '{spec.structure.value}'; certificate refused")


def build_certificate(spec: ProblemSpec, opts: GridOptions = GridOptions(),
                      condition_report: ConditionReport | None = None,
                      overrides: dict | None = None) -> Certificate:
    """Run the full constants pipeline and attach the condition report."""
    cert = compute_constants(spec, opts, overrides=overrides)
    T0, beta = choose_T0(spec, cert, opts)
    if beta <= spec.delta / spec.xi:
        raise CertificationError("selected beta does not exceed delta/xi")
    cert = dataclasses.replace(cert, T0=T0, beta=beta,
                               condition_report=condition_report)
    return compute_bound(spec, cert, opts)


# ---------------------------------------------------------------------------
# Condition verification by quasi-random sampling
# ---------------------------------------------------------------------------

def verify_conditions(spec: ProblemSpec, samples: int = 10000, u_cap: float = 50.0,
                      seed: int = 0, opts: GridOptions = GridOptions()) -> ConditionReport:
    """Sample the four structural conditions over Omega x {|u| <= u_cap}.

    Violations are data, not errors: each condition reports its minimal
    margin and the sample attaining it.  The convexity condition is checked
    as the declared two-point inequality on random (u, v) pairs.
    """
    n, m = spec.dim_x, spec.dim_u
    r0 = find_r0(spec, r_max=opts.r0_max, grid_n=opts.r0_grid_n)
    R = spec.c_g * (r0 + _cost_along_zero(spec, opts.quad_panels))

    unit = halton_points(1 + n + 2 * m, samples, seed)
    t_s = unit[:, 0]
    x_s = ball_from_unit(unit[:, 1:1 + n], R)
    u_s = ball_from_unit(unit[:, 1 + n:1 + n + m], u_cap)
    v_s = ball_from_unit(unit[:, 1 + n + m:], u_cap)

    worst = {name: (np.inf, {}) for name in ("C1", "C2", "C3", "C4")}

    def consider(name, margin, sample):
        if margin < worst[name][0]:
            worst[name] = (margin, sample)

    for k in range(samples):
        t, x, u, v = float(t_s[k]), x_s[k], u_s[k], v_s[k]
        sample = {"t": t, "x": x.tolist(), "u": u.tolist()}
        L_u_val = float(spec.L(t, x, u))
        theta_val = float(spec.theta(float(np.linalg.norm(u))))
        consider("C1", L_u_val - theta_val, sample)

        L_v_val = float(spec.L(t, x, v))
        _, _, L_u_grad = spec.grad_L(t, x, u)
        L_u_grad = np.asarray(L_u_grad, dtype=float).reshape(m)
        two_point = (L_v_val - L_u_val - float(L_u_grad @ (v - u))
                     - 0.5 * spec.mu * float((v - u) @ (v - u)))
        consider("C2", two_point, dict(sample, v=v.tolist()))

        L_t, L_x, _ = spec.grad_L(t, x, u)
        grad_tx = np.concatenate(([float(L_t)], np.asarray(L_x, dtype=float).reshape(n)))
        gmat = np.asarray(spec.g(t, x), dtype=float).reshape(n, m)
        growth = (spec.xi * L_u_val + spec.delta
                  - float(np.linalg.norm(grad_tx)) * float(np.linalg.norm(gmat @ u)))
        consider("C3", growth, sample)

        g_t, g_x = spec.grad_g(t, x)
        g_t = np.asarray(g_t, dtype=float).reshape(n, m)
        g_x = np.asarray(g_x, dtype=float).reshape(n, m, n)
        jac = np.concatenate([g_t.reshape(n * m, 1), g_x.reshape(n * m, n)], axis=1)
        bound_margin = min(spec.c_g - float(np.linalg.norm(gmat, 2)),
                           spec.c_grad_g - float(np.linalg.norm(jac, 2)))
        consider("C4", bound_margin, {"t": t, "x": x.tolist()})

    # positivity of theta itself, folded into C1
    theta_grid = problems.theta_batch(spec, np.linspace(0.0, u_cap, 512))
    theta_min = float(theta_grid.min())

    results = []
    for name in ("C1", "C2", "C3", "C4"):
        margin, sample = worst[name]
        passed = margin >= -MARGIN_TOL
        if name == "C1":
            passed = passed and theta_min > 0.0
            sample = dict(sample, theta_min=theta_min)
        results.append(ConditionResult(condition=name, passed=passed,
                                       margin=float(margin), worst=sample))
    return ConditionReport(samples=samples, u_cap=u_cap, seed=seed,
                           results=tuple(results))
