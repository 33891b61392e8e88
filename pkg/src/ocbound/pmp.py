"""Adjoint verification along a time-reparameterized optimal trajectory.

A multiplier pair (q, p) for the shifted time-optimal system satisfies a
linear backward ODE with transversality p(T) = 0, a stationarity identity in
the control, and a constant positive Hamiltonian

    H(tau) = ( q + <g w, p> ) / ( L + beta ) == h > 0.

This module integrates the ODE backward along a computed trajectory with the
Hamiltonian-consistent terminal value and then treats every identity the
bound derivation relies on as an independent residual check: stationarity,
Hamiltonian constancy, the large-control alternative where q <= 0, the q/p
ratio bound (time-varying-g branch), multiplier size, and the pairing
identity obtained by contracting stationarity with the control.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .certificate import Certificate, THEOREM_TIME_VARYING
from .problems import ProblemSpec, Structure
from .reparam import TimeOptimalTrajectory

STAT_TOL = 1e-4
HAM_REL_TOL = 1e-4
Q_DRIFT_TOL = 1e-8
P_FLOOR = 1e-10
SLACK = 1e-9


class AdjointError(RuntimeError):
    pass


@dataclass
class AdjointPath:
    tau: np.ndarray             # (M+1,), shared with the trajectory
    q: np.ndarray               # (M+1,)
    p: np.ndarray               # (M+1, n)
    h: float
    hamiltonian: np.ndarray     # (M+1,), H(tau)
    stationarity: np.ndarray    # (M+1,), norm of the stationarity residual


@dataclass
class CheckResult:
    name: str
    passed: bool
    applicable: bool
    worst_node: int | None
    worst_value: float | None
    threshold: str
    note: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "applicable": self.applicable,
                "worst_node": self.worst_node, "worst_value": self.worst_value,
                "threshold": self.threshold, "note": self.note}


@dataclass
class PMPReport:
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def _point_data(spec: ProblemSpec, t: float, y: np.ndarray, w: np.ndarray):
    n, m = spec.dim_x, spec.dim_u
    L = float(spec.L(t, y, w))
    L_t, L_x, L_u = spec.grad_L(t, y, w)
    gmat = np.asarray(spec.g(t, y), dtype=float).reshape(n, m)
    g_t, g_x = spec.grad_g(t, y)
    return (L, float(L_t), np.asarray(L_x, dtype=float).reshape(n),
            np.asarray(L_u, dtype=float).reshape(m), gmat,
            np.asarray(g_t, dtype=float).reshape(n, m),
            np.asarray(g_x, dtype=float).reshape(n, m, n))


def _rhs(spec: ProblemSpec, beta: float, t: float, y: np.ndarray, w: np.ndarray,
         q: float, p: np.ndarray):
    L, L_t, L_x, _, gmat, g_t, g_x = _point_data(spec, t, y, w)
    denom = L + beta
    gw = gmat @ w
    inner = q + float(p @ gw)
    dq = -float(p @ (g_t @ w)) / denom + inner * L_t / denom ** 2
    grad_x_pgw = np.einsum("ijk,i,j->k", g_x, p, w)
    dp = -grad_x_pgw / denom + inner * L_x / denom ** 2
    return dq, dp


def integrate_adjoint(spec: ProblemSpec, cert: Certificate,
                      traj: TimeOptimalTrajectory) -> AdjointPath:
    """Backward RK4 for the multiplier pair along the trajectory.

    The scaling freedom is removed by fixing h = 1; the terminal values are
    then p(T) = 0 and q(T) = L(T) + beta, which makes the Hamiltonian equal
    to h at the endpoint.  Constancy along the path is *checked* afterwards,
    not enforced, so the Hamiltonian residual stays an independent signal.
    """
    beta = traj.beta
    nodes = traj.tau.shape[0]
    n = spec.dim_x
    q = np.empty(nodes)
    p = np.empty((nodes, n))

    t_end = float(traj.t_of_tau[-1])
    L_end = float(spec.L(t_end, traj.y[-1], traj.w[-1]))
    q[-1] = L_end + beta
    p[-1] = 0.0

    t_mid = 0.5 * (traj.t_of_tau[1:] + traj.t_of_tau[:-1])
    y_mid = 0.5 * (traj.y[1:] + traj.y[:-1])
    w_mid = 0.5 * (traj.w[1:] + traj.w[:-1])

    for j in range(nodes - 2, -1, -1):
        dtau = float(traj.tau[j + 1] - traj.tau[j])
        qj1, pj1 = q[j + 1], p[j + 1]

        k1q, k1p = _rhs(spec, beta, float(traj.t_of_tau[j + 1]), traj.y[j + 1],
                        traj.w[j + 1], qj1, pj1)
        k2q, k2p = _rhs(spec, beta, float(t_mid[j]), y_mid[j], w_mid[j],
                        qj1 - 0.5 * dtau * k1q, pj1 - 0.5 * dtau * k1p)
        k3q, k3p = _rhs(spec, beta, float(t_mid[j]), y_mid[j], w_mid[j],
                        qj1 - 0.5 * dtau * k2q, pj1 - 0.5 * dtau * k2p)
        k4q, k4p = _rhs(spec, beta, float(traj.t_of_tau[j]), traj.y[j],
                        traj.w[j], qj1 - dtau * k3q, pj1 - dtau * k3p)

        q[j] = qj1 - dtau / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        p[j] = pj1 - dtau / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        if not (np.isfinite(q[j]) and np.all(np.isfinite(p[j]))):
            raise AdjointError(f"adjoint integration blow-up at node {j}")

    hamiltonian = np.empty(nodes)
    stationarity = np.empty(nodes)
    for j in range(nodes):
        L, _, _, L_u, gmat, _, _ = _point_data(spec, float(traj.t_of_tau[j]),
                                               traj.y[j], traj.w[j])
        denom = L + beta
        gw = gmat @ traj.w[j]
        inner = q[j] + float(p[j] @ gw)
        hamiltonian[j] = inner / denom
        residual = gmat.T @ p[j] / denom - inner * L_u / denom ** 2
        stationarity[j] = float(np.linalg.norm(residual))

    return AdjointPath(tau=traj.tau, q=q, p=p, h=1.0,
                       hamiltonian=hamiltonian, stationarity=stationarity)


def residual_report(spec: ProblemSpec, cert: Certificate,
                    traj: TimeOptimalTrajectory, adj: AdjointPath) -> PMPReport:
    """Evaluate every multiplier identity as a residual check.

    Failures are report entries, never exceptions; checks that do not apply
    to the problem structure are marked not-applicable and pass vacuously.
    """
    beta = traj.beta
    nodes = traj.tau.shape[0]
    w_norm = np.linalg.norm(traj.w, axis=1)
    p_norm = np.linalg.norm(adj.p, axis=1)

    L_nodes = np.empty(nodes)
    Lu_dot_w = np.empty(nodes)
    p_dot_gw = np.empty(nodes)
    for j in range(nodes):
        L, _, _, L_u, gmat, _, _ = _point_data(spec, float(traj.t_of_tau[j]),
                                               traj.y[j], traj.w[j])
        L_nodes[j] = L
        Lu_dot_w[j] = float(L_u @ traj.w[j])
        p_dot_gw[j] = float(adj.p[j] @ (gmat @ traj.w[j]))

    checks = []

    # (a) stationarity, tolerance scaled by 1 + |p| to stay meaningful near p(T)=0
    stat_scaled = adj.stationarity / (STAT_TOL * (1.0 + p_norm))
    j = int(np.argmax(stat_scaled))
    checks.append(CheckResult(
        name="stationarity", passed=bool(stat_scaled[j] <= 1.0), applicable=True,
        worst_node=j, worst_value=float(adj.stationarity[j]),
        threshold=f"|residual| <= {STAT_TOL:g} * (1 + |p|)"))

    # (b) Hamiltonian constancy relative to h
    ham_dev = np.abs(adj.hamiltonian - adj.h) / adj.h
    j = int(np.argmax(ham_dev))
    checks.append(CheckResult(
        name="hamiltonian-constancy", passed=bool(ham_dev[j] <= HAM_REL_TOL),
        applicable=True, worst_node=j, worst_value=float(ham_dev[j]),
        threshold=f"relative deviation <= {HAM_REL_TOL:g}"))

    # Hamiltonian positivity (the h > 0 alternative of the multiplier rule)
    j = int(np.argmin(adj.hamiltonian))
    checks.append(CheckResult(
        name="hamiltonian-positive", passed=bool(adj.hamiltonian[j] > 0.0),
        applicable=True, worst_node=j, worst_value=float(adj.hamiltonian[j]),
        threshold="H > 0 at every node"))

    # (c) where q <= 0 the control must be large
    low_q = np.nonzero(adj.q <= 0.0)[0]
    floor = (cert.c + 1.0) / cert.T0
    if low_q.size == 0:
        checks.append(CheckResult(
            name="large-control-where-q-nonpositive", passed=True, applicable=True,
            worst_node=None, worst_value=None,
            threshold=f"|w| > {floor:.6g} wherever q <= 0", note="no node with q <= 0"))
    else:
        j = int(low_q[np.argmin(w_norm[low_q])])
        checks.append(CheckResult(
            name="large-control-where-q-nonpositive",
            passed=bool(np.all(w_norm[low_q] > floor)), applicable=True,
            worst_node=j, worst_value=float(w_norm[j]),
            threshold=f"|w| > {floor:.6g} wherever q <= 0"))

    # (d) ratio bound, only meaningful for the time-varying-g branch
    if cert.theorem_used == THEOREM_TIME_VARYING and cert.gamma is not None:
        mask = (adj.q < 0.0) & (p_norm >= P_FLOOR)
        idx = np.nonzero(mask)[0]
        if idx.size == 0:
            checks.append(CheckResult(
                name="q-over-p-ratio", passed=True, applicable=True,
                worst_node=None, worst_value=None,
                threshold=f"|q|/|p| <= gamma = {cert.gamma:.6g}",
                note="no node with q < 0 and |p| above the floor"))
        else:
            ratios = np.abs(adj.q[idx]) / p_norm[idx]
            k = int(np.argmax(ratios))
            checks.append(CheckResult(
                name="q-over-p-ratio", passed=bool(ratios[k] <= cert.gamma),
                applicable=True, worst_node=int(idx[k]), worst_value=float(ratios[k]),
                threshold=f"|q|/|p| <= gamma = {cert.gamma:.6g}"))
    else:
        checks.append(CheckResult(
            name="q-over-p-ratio", passed=True, applicable=False,
            worst_node=None, worst_value=None,
            threshold="time-varying-g branch only"))

    # (e) multiplier size and horizon bound
    size_limit = (cert.lambda0 + beta) * spec.xi
    j = int(np.argmax(p_norm))
    checks.append(CheckResult(
        name="multiplier-size",
        passed=bool(p_norm[j] / adj.h <= size_limit + SLACK
                    and traj.T <= cert.lambda0 + beta + SLACK),
        applicable=True, worst_node=j, worst_value=float(p_norm[j] / adj.h),
        threshold=f"|p|/h <= {size_limit:.6g} and T <= {cert.lambda0 + beta:.6g}"))

    # (f) pairing identity: stationarity contracted with the control
    pair_res = np.abs((L_nodes + beta) * p_dot_gw - (adj.q + p_dot_gw) * Lu_dot_w)
    pair_tol = STAT_TOL * (L_nodes + beta) ** 2 * (1.0 + p_norm) * (1.0 + w_norm)
    scaled = pair_res / pair_tol
    j = int(np.argmax(scaled))
    checks.append(CheckResult(
        name="pairing-identity", passed=bool(scaled[j] <= 1.0), applicable=True,
        worst_node=j, worst_value=float(pair_res[j]),
        threshold=f"residual <= {STAT_TOL:g} * (L+beta)^2 * (1+|p|)(1+|w|)"))

    # q must be constant for autonomous data (the ODE right side vanishes)
    if spec.structure is Structure.AUTONOMOUS:
        drift = float(adj.q.max() - adj.q.min())
        checks.append(CheckResult(
            name="q-constant-when-autonomous", passed=bool(drift <= Q_DRIFT_TOL),
            applicable=True, worst_node=int(np.argmax(np.abs(adj.q - adj.q[-1]))),
            worst_value=drift, threshold=f"max-min of q <= {Q_DRIFT_TOL:g}"))
    else:
        checks.append(CheckResult(
            name="q-constant-when-autonomous", passed=True, applicable=False,
            worst_node=None, worst_value=None, threshold="autonomous problems only"))

    # multipliers never vanish simultaneously
    joint = np.maximum(np.abs(adj.q), p_norm)
    j = int(np.argmin(joint))
    checks.append(CheckResult(
        name="multiplier-nonvanishing", passed=bool(joint[j] > 0.0), applicable=True,
        worst_node=j, worst_value=float(joint[j]), threshold="max(|q|, |p|) > 0"))

    # control energy inequality distilled from the two-branch bound argument
    rhs = cert.lambda0 + beta + np.where(adj.q < 0.0, np.abs(adj.q) / adj.h, 0.0)
    energy_margin = rhs - 0.5 * spec.mu * w_norm ** 2
    j = int(np.argmin(energy_margin))
    checks.append(CheckResult(
        name="control-energy-inequality", passed=bool(energy_margin[j] >= -SLACK),
        applicable=True, worst_node=j, worst_value=float(energy_margin[j]),
        threshold="mu/2 |w|^2 <= lambda0 + beta + |q|/h [q<0]"))

    return PMPReport(checks=tuple(checks))
