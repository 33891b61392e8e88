import json
from pathlib import Path

import pytest

from ocbound.cli import main

RUN_ARGS = ["--solver-n", "200", "--samples", "2000"]


def run_cli(args):
    return main(args)


def test_problems_listing(capsys):
    assert run_cli(["problems"]) == 0
    out = capsys.readouterr().out
    assert "toy-quadratic" in out and "lq-tv" in out


def test_run_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "artifacts"
    code = run_cli(["run", "--problem", "toy-quadratic", *RUN_ARGS,
                    "--out", str(out)])
    assert code == 0
    for name in ("certificate.json", "solution.csv", "timeoptimal.csv",
                 "adjoint.csv", "pmp_report.json", "summary.json"):
        assert (out / name).exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["exit_code"] == 0
    assert summary["headline"]["bound_satisfied"] is True
    assert "bound satisfied" in capsys.readouterr().out


def test_run_twice_is_byte_identical(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    for out in (out1, out2):
        assert run_cli(["run", "--problem", "toy-quadratic", *RUN_ARGS,
                        "--emit-probes", "--probes-n", "16",
                        "--lipschitz-pairs", "50", "--out", str(out)]) == 0
    files1 = sorted(p.name for p in out1.iterdir())
    files2 = sorted(p.name for p in out2.iterdir())
    assert files1 == files2 and "probes.csv" in files1
    for name in files1:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_verify_consumes_prior_artifacts(tmp_path):
    out = tmp_path / "artifacts"
    assert run_cli(["run", "--problem", "toy-quadratic", *RUN_ARGS,
                    "--out", str(out)]) == 0
    assert run_cli(["verify", "--artifacts", str(out), "--out", str(out)]) == 0


def test_verify_missing_artifacts(tmp_path, capsys):
    assert run_cli(["verify", "--out", str(tmp_path / "nothing")]) == 2
    assert "missing prior artifact" in capsys.readouterr().err


def test_solve_subcommand(tmp_path, capsys):
    out = tmp_path / "solve_out"
    assert run_cli(["solve", "--problem", "toy-quadratic", "--solver-n", "100",
                    "--out", str(out)]) == 0
    assert (out / "solution.csv").exists()
    assert "cost = 1" in capsys.readouterr().out


def test_certify_subcommand_with_override_failure(tmp_path, capsys):
    # a wrong convexity modulus must be caught by the sampled conditions
    out = tmp_path / "cert_out"
    code = run_cli(["certify", "--problem", "toy-quadratic", "--set", "mu=2",
                    "--samples", "2000", "--out", str(out)])
    assert code == 3
    assert "certification failed" in capsys.readouterr().out


def test_config_file(tmp_path):
    cfg = tmp_path / "problem.cfg"
    cfg.write_text("problem.name = toy-quadratic\n"
                   "problem.overrides.delta = 0.2\n")
    out = tmp_path / "cfg_out"
    assert run_cli(["certify", "--config", str(cfg), "--samples", "2000",
                    "--out", str(out)]) == 0
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["problem"]["overrides"]["delta"] == 0.2


def test_cli_flag_overrides_config(tmp_path):
    cfg = tmp_path / "problem.cfg"
    cfg.write_text("problem.name = toy-quadratic\n"
                   "problem.overrides.delta = 0.2\n")
    out = tmp_path / "cfg_out"
    assert run_cli(["certify", "--config", str(cfg), "--set", "delta=0.3",
                    "--samples", "2000", "--out", str(out)]) == 0
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["problem"]["overrides"]["delta"] == 0.3


def test_unknown_problem_exits_2(capsys):
    assert run_cli(["run", "--problem", "nope"]) == 2
    assert "available" in capsys.readouterr().err


def test_selector_mismatch_exits_2(capsys):
    assert run_cli(["run", "--problem", "lq-tracking", "--theorem", "force-2"]) == 2
    err = capsys.readouterr().err
    assert "force-2" in err


def test_missing_problem_exits_2(capsys):
    assert run_cli(["run"]) == 2
    assert "no problem selected" in capsys.readouterr().err


def test_bad_set_syntax_exits_2(capsys):
    assert run_cli(["run", "--problem", "toy-quadratic", "--set", "mu"]) == 2
    assert "key=value" in capsys.readouterr().err
