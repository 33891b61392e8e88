import json

import pytest

import ocbound as ob
from ocbound.cli import ConfigurationError, _Client


@pytest.fixture(scope="module")
def client():
    return _Client(server=None)


SMALL_RUN = {
    "problem": {"name": "toy-quadratic", "overrides": {}},
    "solver": {"n": 200, "tol": 1e-8, "max_iter": 1000},
    "sampling": {"samples": 2000, "u_cap": 50.0, "seed": 0},
}


def test_health(client):
    data = client.get("/health")
    assert data["status"] == "ok"
    assert data["version"] == ob.__version__


def test_problem_listing(client):
    data = client.get("/problems")
    names = {p["name"] for p in data["problems"]}
    assert names == {"toy-quadratic", "lq-tracking", "sin-well", "lq-tv"}
    by_name = {p["name"]: p for p in data["problems"]}
    assert by_name["lq-tv"]["structure"] == "time-varying-g"
    assert by_name["lq-tracking"]["constants"]["mu"] == 1.0


def test_certify_endpoint(client):
    data = client.post("/certify", {
        "problem": {"name": "toy-quadratic"},
        "sampling": {"samples": 2000},
    })
    assert data["exit_code"] == 0
    cert = json.loads(data["files"]["certificate.json"])
    assert cert["ell"] == pytest.approx(2.0202, abs=1e-3)
    assert cert["theorem_used"] == "theorem-1"
    assert cert["condition_report"]["passed"] is True


def test_solve_endpoint(client):
    data = client.post("/solve", {
        "problem": {"name": "toy-quadratic"},
        "solver": {"n": 100},
    })
    assert data["exit_code"] == 0
    assert data["summary"]["cost"] == pytest.approx(1.0)
    assert "solution.csv" in data["files"]


def test_run_and_verify_round_trip(client):
    run = client.post("/run", SMALL_RUN)
    assert run["exit_code"] == 0
    files = run["files"]
    for name in ("certificate.json", "solution.csv", "timeoptimal.csv",
                 "adjoint.csv", "pmp_report.json", "summary.json"):
        assert name in files
    headline = run["summary"]["headline"]
    assert headline["bound_satisfied"] is True
    assert headline["max_control_norm"] == 0.0

    verify = client.post("/verify", {
        "certificate": json.loads(files["certificate.json"]),
        "solution_csv": files["solution.csv"],
    })
    assert verify["exit_code"] == 0
    assert verify["summary"]["status"] == "pass"
    assert verify["summary"]["bound_satisfied"] is True


def test_unknown_problem_maps_to_400(client):
    with pytest.raises(ConfigurationError, match="available"):
        client.post("/run", {"problem": {"name": "nope"}})


def test_branch_selector_mismatch_rejected(client):
    with pytest.raises(ConfigurationError, match="force-2"):
        client.post("/run", dict(SMALL_RUN, theorem="force-2"))
    with pytest.raises(ConfigurationError, match="force-1"):
        client.post("/run", {
            "problem": {"name": "lq-tv"},
            "theorem": "force-1",
        })


def test_incomplete_certificate_rejected(client):
    with pytest.raises(ConfigurationError, match="incomplete"):
        client.post("/verify", {
            "certificate": {"problem": {"name": "toy-quadratic", "overrides": {}}},
            "solution_csv": "t,u_1,x_1\n0,0,0\n1,0,0\n",
        })
