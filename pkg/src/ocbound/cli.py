"""Command-line client for the certification service.

The CLI is a thin client: every subcommand builds a request, sends it to
the HTTP service (an in-process instance by default, or a remote one via
--server), and writes the returned artifact files under --out.  Keeping all
artifact generation on the service side makes byte-identical reruns a
property of the pipeline rather than of the client.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, problems


def _asgi_request(method: str, path: str, payload: dict | None):
    """One request against an in-process service instance."""
    import asyncio

    import httpx

    from .service import app

    async def go():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://ocbound.local") as client:
            return await client.request(method, path, json=payload)

    return asyncio.run(go())


class _Client:
    """Minimal POST/GET wrapper over the remote or in-process transport."""

    def __init__(self, server: str | None):
        self._server = server

    def get(self, path: str) -> dict:
        return self._request("GET", path)

    def post(self, path: str, payload: dict) -> dict:
        return self._request("POST", path, payload)

    def _request(self, method: str, path: str, payload: dict | None = None) -> dict:
        if self._server:
            import httpx

            with httpx.Client(base_url=self._server, timeout=600.0) as client:
                response = client.request(method, path, json=payload)
        else:
            response = _asgi_request(method, path, payload)
        return self._check(response)

    @staticmethod
    def _check(response) -> dict:
        if response.status_code == 400:
            detail = response.json().get("detail", response.text)
            raise ConfigurationError(detail)
        if response.status_code != 200:
            raise RuntimeError(f"service error {response.status_code}: {response.text}")
        return response.json()


class ConfigurationError(Exception):
    pass


def _write_files(out_dir: str, files: dict[str, str]) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        with open(out / name, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(content)


def _parse_overrides(pairs: list[str]) -> dict[str, float]:
    overrides: dict[str, float] = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep:
            raise ConfigurationError(f"--set expects key=value, got {pair!r}")
        try:
            overrides[key.strip()] = float(value)
        except ValueError as exc:
            raise ConfigurationError(f"--set {key}: {value!r} is not a number") from exc
    return overrides


def _problem_payload(args) -> dict:
    name = args.problem
    overrides: dict[str, float] = {}
    if args.config:
        cfg_name, cfg_overrides = problems.load_config(args.config)
        name = name or cfg_name
        overrides.update(cfg_overrides)
    overrides.update(_parse_overrides(args.set or []))
    if not name:
        raise ConfigurationError("no problem selected; use --problem or a config file")
    return {"name": name, "overrides": overrides}


def _common_payload(args) -> dict:
    payload = {
        "problem": _problem_payload(args),
        "theorem": args.theorem,
        "solver": {"n": args.solver_n, "tol": args.tol, "max_iter": args.max_iter},
        "grids": {"omega_grid_n": args.grid_n},
        "sampling": {"samples": args.samples, "u_cap": args.u_cap, "seed": args.seed},
        "emit": {"trajectories": True, "adjoint": True, "probes": args.emit_probes},
        "probes_n": args.probes_n,
        "lipschitz_pairs": args.lipschitz_pairs,
    }
    if args.reparam_m is not None:
        payload["reparam_m"] = args.reparam_m
    return payload


def _print_headline(summary: dict) -> None:
    headline = summary.get("headline")
    if headline:
        status = "satisfied" if headline["bound_satisfied"] else "VIOLATED"
        rel = "<=" if headline["bound_satisfied"] else ">"
        print(f"bound {status}: max|u| = {headline['max_control_norm']:.6g} "
              f"{rel} ell = {headline['ell']:.6g}")
    for name, stage in summary.get("stages", {}).items():
        print(f"  {name}: {stage.get('status', '?')}")


def cmd_run(args) -> int:
    client = _Client(args.server)
    data = client.post("/run", _common_payload(args))
    _write_files(args.out, data["files"])
    _print_headline(data["summary"])
    print(f"artifacts written to {args.out} (exit {data['exit_code']})")
    return int(data["exit_code"])


def cmd_certify(args) -> int:
    client = _Client(args.server)
    payload = {
        "problem": _problem_payload(args),
        "theorem": args.theorem,
        "grids": {"omega_grid_n": args.grid_n},
        "sampling": {"samples": args.samples, "u_cap": args.u_cap, "seed": args.seed},
    }
    data = client.post("/certify", payload)
    _write_files(args.out, data["files"])
    summary = data["summary"]
    if summary.get("status") == "pass":
        cert = summary["certificate"]
        print(f"certificate: ell = {cert['ell']:.6g} ({cert['theorem_used']}), "
              f"beta = {cert['beta']:.6g}, T0 = {cert['T0']:.6g}")
    else:
        print(f"certification failed: {summary.get('detail', summary.get('status'))}")
    return int(data["exit_code"])


def cmd_solve(args) -> int:
    client = _Client(args.server)
    payload = {
        "problem": _problem_payload(args),
        "solver": {"n": args.solver_n, "tol": args.tol, "max_iter": args.max_iter},
    }
    data = client.post("/solve", payload)
    _write_files(args.out, data["files"])
    summary = data["summary"]
    print(f"cost = {summary['cost']:.9g}, iterations = {summary['iterations']}, "
          f"converged = {summary['converged']}")
    return int(data["exit_code"])


def cmd_verify(args) -> int:
    src = Path(args.artifacts or args.out)
    cert_path = src / "certificate.json"
    sol_path = src / "solution.csv"
    for path in (cert_path, sol_path):
        if not path.exists():
            raise ConfigurationError(f"missing prior artifact {path}")
    payload = {
        "certificate": json.loads(cert_path.read_text(encoding="utf-8")),
        "solution_csv": sol_path.read_text(encoding="utf-8"),
    }
    if args.reparam_m is not None:
        payload["reparam_m"] = args.reparam_m
    client = _Client(args.server)
    data = client.post("/verify", payload)
    _write_files(args.out, data["files"])
    summary = data["summary"]
    print(f"adjoint verification: {summary['status']}"
          + (f" (failing: {', '.join(summary['failing'])})" if summary.get("failing") else ""))
    return int(data["exit_code"])


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("ocbound.service:app", host=args.host, port=args.port)
    return 0


def cmd_problems(args) -> int:
    client = _Client(args.server)
    data = client.get("/problems")
    for info in data["problems"]:
        print(f"{info['name']:15s} n={info['dim_x']} m={info['dim_u']} "
              f"[{info['structure']}] {info['summary']}")
    return 0


def _add_common(parser: argparse.ArgumentParser, solver: bool = True,
                certificate: bool = True) -> None:
    parser.add_argument("--problem", help="built-in problem name")
    parser.add_argument("--set", action="append", metavar="K=V",
                        help="override a declared constant (repeatable)")
    parser.add_argument("--config", help="key-value config file (problem.name, problem.overrides.*)")
    parser.add_argument("--out", default="out", help="artifact directory (default: out)")
    parser.add_argument("--server", help="remote service URL; default is in-process")
    if solver:
        parser.add_argument("--solver-n", type=int, default=1000, help="control grid intervals")
        parser.add_argument("--tol", type=float, default=1e-8, help="gradient max-norm tolerance")
        parser.add_argument("--max-iter", type=int, default=10000)
    if certificate:
        parser.add_argument("--theorem", choices=("auto", "force-1", "force-2"),
                            default="auto", help="bound branch selector")
        parser.add_argument("--grid-n", type=int, default=401,
                            help="per-axis grid for the constants sweeps")
        parser.add_argument("--samples", type=int, default=10000,
                            help="condition verification sample count")
        parser.add_argument("--u-cap", type=float, default=50.0)
        parser.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ocbound",
        description="certified control bounds for free-endpoint Lagrange problems")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="full pipeline: conditions, certificate, "
                                       "solve, reparameterize, adjoint checks")
    _add_common(p_run)
    p_run.add_argument("--reparam-m", type=int, help="time-optimal grid size (default 4N)")
    p_run.add_argument("--emit-probes", action="store_true",
                       help="also run velocity-set probes and write probes.csv")
    p_run.add_argument("--probes-n", type=int, default=64)
    p_run.add_argument("--lipschitz-pairs", type=int, default=1000)
    p_run.set_defaults(fn=cmd_run)

    p_cert = sub.add_parser("certify", help="certificate only")
    _add_common(p_cert, solver=False)
    p_cert.set_defaults(fn=cmd_certify)

    p_solve = sub.add_parser("solve", help="solver only")
    _add_common(p_solve, certificate=False)
    p_solve.set_defaults(fn=cmd_solve)

    p_verify = sub.add_parser("verify", help="adjoint checks against prior artifacts")
    p_verify.add_argument("--artifacts", help="directory with certificate.json and "
                                              "solution.csv (default: --out)")
    p_verify.add_argument("--out", default="out")
    p_verify.add_argument("--server", help="remote service URL; default is in-process")
    p_verify.add_argument("--reparam-m", type=int)
    p_verify.set_defaults(fn=cmd_verify)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(fn=cmd_serve)

    p_list = sub.add_parser("problems", help="list built-in problems")
    p_list.add_argument("--server", help="remote service URL; default is in-process")
    p_list.set_defaults(fn=cmd_problems)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
