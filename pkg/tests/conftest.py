import numpy as np
import pytest

import ocbound as ob

BUILTINS = ("toy-quadratic", "lq-tracking", "sin-well", "lq-tv")
AUTONOMOUS = ("toy-quadratic", "lq-tracking", "sin-well")

# closed-form optimum of the tracking problem, from the stationarity system
# xddot = x - 1, x(0) = 0, xdot(1) = 0 solved by hand
LQ_U0 = np.tanh(1.0)
LQ_COST = 0.1 + np.tanh(1.0) / 2.0


def lq_u_star(t):
    return np.tanh(1.0) * np.cosh(t) - np.sinh(t)


def lq_x_star(t):
    return 1.0 - np.cosh(1.0 - t) / np.cosh(1.0)


@pytest.fixture(scope="session")
def specs():
    return {name: ob.builtin(name) for name in BUILTINS}


@pytest.fixture(scope="session")
def certificates(specs):
    out = {}
    for name, spec in specs.items():
        report = ob.verify_conditions(spec, samples=4000, seed=0)
        assert report.passed, f"structural conditions failed for {name}"
        out[name] = ob.build_certificate(spec, condition_report=report)
    return out


@pytest.fixture(scope="session")
def solutions(specs):
    opts = ob.SolverOptions(n=1000)
    return {name: ob.solve(spec, opts) for name, spec in specs.items()}


@pytest.fixture(scope="session")
def trajectories(specs, certificates, solutions):
    return {name: ob.to_time_optimal(specs[name], solutions[name],
                                     certificates[name].beta)
            for name in BUILTINS}


@pytest.fixture(scope="session")
def adjoints(specs, certificates, trajectories):
    return {name: ob.integrate_adjoint(specs[name], certificates[name],
                                       trajectories[name])
            for name in BUILTINS}


@pytest.fixture(scope="session")
def pmp_reports(specs, certificates, trajectories, adjoints):
    return {name: ob.residual_report(specs[name], certificates[name],
                                     trajectories[name], adjoints[name])
            for name in BUILTINS}
