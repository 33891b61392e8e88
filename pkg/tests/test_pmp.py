import numpy as np
import pytest

import ocbound as ob
from ocbound.certificate import Certificate

from conftest import AUTONOMOUS, BUILTINS


@pytest.fixture(scope="module")
def frozen_toy(solutions):
    """Constant-cost system with a pinned beta = 7 certificate.

    Along the zero control the multiplier ODE right side vanishes, so the
    backward integration is exact: q == 8, p == 0, H == 1.
    """
    spec = ob.builtin("toy-quadratic")
    cert = Certificate(problem="toy-quadratic", r0=1e-6, c=1.0 + 1e-6,
                       R_omega=1.0 + 1e-6, lambda0=1.0, lambda1=0.0,
                       T0=0.5, beta=7.0, ell=4.0, theorem_used="theorem-1")
    traj = ob.to_time_optimal(spec, solutions["toy-quadratic"], beta=7.0)
    adj = ob.integrate_adjoint(spec, cert, traj)
    return spec, cert, traj, adj


def test_frozen_system_integrates_exactly(frozen_toy):
    _, _, traj, adj = frozen_toy
    assert traj.T == pytest.approx(8.0, abs=1e-12)
    assert np.abs(adj.q - 8.0).max() <= 1e-12
    assert np.abs(adj.p).max() == 0.0
    assert np.abs(adj.hamiltonian - 1.0).max() <= 1e-12
    assert np.abs(adj.stationarity).max() <= 1e-15


def test_frozen_system_passes_all_checks(frozen_toy):
    spec, cert, traj, adj = frozen_toy
    report = ob.residual_report(spec, cert, traj, adj)
    assert report.passed


def test_terminal_conditions(specs, certificates, trajectories, adjoints):
    for name in BUILTINS:
        traj, adj = trajectories[name], adjoints[name]
        assert np.abs(adj.p[-1]).max() == 0.0  # imposed transversality
        spec = specs[name]
        L_end = float(spec.L(float(traj.t_of_tau[-1]), traj.y[-1], traj.w[-1]))
        assert adj.q[-1] == pytest.approx(L_end + traj.beta, abs=1e-12)
        assert adj.h == 1.0


def test_q_constant_for_autonomous_problems(adjoints):
    for name in AUTONOMOUS:
        adj = adjoints[name]
        assert adj.q.max() - adj.q.min() <= 1e-8


def test_hamiltonian_positive_and_nearly_constant(adjoints):
    for name in BUILTINS:
        adj = adjoints[name]
        assert adj.hamiltonian.min() > 0.0
        assert np.abs(adj.hamiltonian - adj.h).max() / adj.h <= 1e-4


def test_stationarity_residual_within_tolerance(adjoints):
    for name in BUILTINS:
        adj = adjoints[name]
        p_norm = np.linalg.norm(adj.p, axis=1)
        assert np.all(adj.stationarity <= 1e-4 * (1.0 + p_norm))


def test_multiplier_size_and_horizon(specs, certificates, trajectories, adjoints):
    for name in BUILTINS:
        spec, cert = specs[name], certificates[name]
        traj, adj = trajectories[name], adjoints[name]
        p_norm = np.linalg.norm(adj.p, axis=1)
        assert p_norm.max() / adj.h <= (cert.lambda0 + cert.beta) * spec.xi + 1e-9
        assert traj.T <= cert.lambda0 + cert.beta + 1e-9


def test_report_checks_pass_for_all_builtins(pmp_reports):
    for name, report in pmp_reports.items():
        failing = [c.name for c in report.checks if not c.passed]
        assert report.passed, f"{name}: failing checks {failing}"


def test_low_q_check_is_vacuous_for_builtins(pmp_reports, adjoints):
    for name in BUILTINS:
        assert adjoints[name].q.min() > 0.0
        check = pmp_reports[name].check("large-control-where-q-nonpositive")
        assert check.passed
        assert check.note == "no node with q <= 0"


def test_ratio_check_applicability(pmp_reports):
    assert pmp_reports["lq-tv"].check("q-over-p-ratio").applicable
    assert pmp_reports["lq-tv"].check("q-over-p-ratio").passed
    for name in AUTONOMOUS:
        assert not pmp_reports[name].check("q-over-p-ratio").applicable


def test_multipliers_never_vanish_jointly(adjoints):
    for adj in adjoints.values():
        joint = np.maximum(np.abs(adj.q), np.linalg.norm(adj.p, axis=1))
        assert joint.min() > 0.0


def test_control_energy_inequality(specs, certificates, trajectories, adjoints):
    for name in BUILTINS:
        spec, cert = specs[name], certificates[name]
        traj, adj = trajectories[name], adjoints[name]
        w_norm = np.linalg.norm(traj.w, axis=1)
        rhs = cert.lambda0 + cert.beta + np.where(adj.q < 0.0, np.abs(adj.q), 0.0)
        assert np.all(0.5 * spec.mu * w_norm ** 2 <= rhs + 1e-9)


def test_pairing_identity_residual_shrinks_with_solver_tolerance(certificates):
    spec = ob.builtin("lq-tracking")
    cert = certificates["lq-tracking"]
    residuals = []
    for tol in (1e-6, 1e-8):
        sol = ob.solve(spec, ob.SolverOptions(n=1000, tol=tol))
        traj = ob.to_time_optimal(spec, sol, cert.beta)
        adj = ob.integrate_adjoint(spec, cert, traj)
        report = ob.residual_report(spec, cert, traj, adj)
        residuals.append(report.check("pairing-identity").worst_value)
    assert residuals[1] < residuals[0]


def test_report_serialization(pmp_reports):
    data = pmp_reports["lq-tv"].to_dict()
    assert data["passed"] is True
    names = [c["name"] for c in data["checks"]]
    assert "stationarity" in names and "q-over-p-ratio" in names
