"""Command-line interface.

The CLI is a thin client of the HTTP service: each subcommand issues one
or more endpoint calls (against an in-process app by default, or against
``--server-url``) and writes the returned arrays as CSV/JSON artifacts.

Exit codes: 0 success, 1 validation failure, 2 numeric failure, 3 I/O
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, artifacts, errors
from .client import ServiceClient
from .suite import load_suite, run_suite

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERIC = 2
EXIT_IO = 3

NUMERIC_ERRORS = (errors.NumericFailure, errors.ThresholdError, errors.SizeCapError)


def _common(parser):
    parser.add_argument("--out", default=None, help="output directory for artifacts")
    parser.add_argument("--seed", type=int, default=0, help="seed recorded with the run")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (falls back to FRACISAACS_THREADS)")
    parser.add_argument("--fail-fast", action="store_true", help="abort on the first failing stage")
    parser.add_argument("--server-url", default=None,
                        help="base URL of a running service (default: in-process)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracisaacs", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check the structural assumptions of a problem spec")
    p.add_argument("--config", required=True)
    _common(p)

    p = sub.add_parser("solve", help="solve a problem spec")
    p.add_argument("--config", required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=50_000)
    _common(p)

    p = sub.add_parser("fraclap-check", help="compare the operator against an analytic oracle")
    p.add_argument("--config", default=None, help="take the grid from a problem spec file")
    p.add_argument("--points", type=int, default=2049)
    p.add_argument("--half-width", type=float, default=np.pi)
    p.add_argument("--extension", choices=("periodic", "constant_tail"), default="periodic")
    p.add_argument("--oracle", choices=("cos", "poisson"), default=None)
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--tol-check", type=float, default=1e-2)
    _common(p)

    p = sub.add_parser("convolve", help="sup/inf envelopes of a grid function")
    p.add_argument("--eps", required=True, help="comma-separated decreasing regularizations")
    p.add_argument("--solution", default=None, help="CSV with x,u columns")
    p.add_argument("--function", choices=("abs", "cos"), default="abs")
    p.add_argument("--points", type=int, default=1025)
    p.add_argument("--half-width", type=float, default=2.0)
    p.add_argument("--extension", choices=("periodic", "constant_tail"), default="constant_tail")
    p.add_argument("--tail-value", type=float, default=None)
    _common(p)

    p = sub.add_parser("regularity", help="difference-quotient inequality residuals")
    p.add_argument("--config", required=True)
    p.add_argument("--solution", default=None, help="CSV with x,u (default: solve first)")
    p.add_argument("--h-list", default="1,2,4", help="steps in grid cells")
    p.add_argument("--directions", default=None, help="semicolon-separated unit vectors, e.g. '1;-1'")
    p.add_argument("--A", type=float, default=None)
    p.add_argument("--B", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    _common(p)

    p = sub.add_parser("oscillation", help="shrinking-cylinder oscillation cascade")
    p.add_argument("--config", required=True)
    p.add_argument("--solution", default=None)
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--sigma-bisect", action="store_true",
                   help="report the largest passing exponent (always computed)")
    p.add_argument("--k-max", type=int, default=4)
    p.add_argument("--slack", type=float, default=0.1)
    _common(p)

    p = sub.add_parser("certify", help="closed-form Lipschitz certificate")
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--K1", type=float, required=True)
    p.add_argument("--C", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    _common(p)

    p = sub.add_parser("suite", help="run an experiment suite")
    p.add_argument("--config", required=True, help="suite JSON file")
    _common(p)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8711)

    return parser


def _out_dir(args) -> Path:
    out = Path(args.out or "fracisaacs-out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_spec(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise errors.SpecError(f"cannot parse spec file {path}: {exc}") from exc


def _read_solution_csv(path) -> list:
    rows = Path(path).read_text(encoding="utf-8").strip().splitlines()
    header = rows[0].split(",")
    ucol = header.index("u")
    return [float(r.split(",")[ucol]) for r in rows[1:]]


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return max(1, args.threads)
    env = os.environ.get("FRACISAACS_THREADS")
    if not env:
        return 1
    try:
        return max(1, int(env))
    except ValueError as exc:
        raise errors.SpecError(f"FRACISAACS_THREADS must be an integer, got {env!r}") from exc


def cmd_validate(args, client) -> int:
    out = client.validate(_load_spec(args.config))
    text = artifacts.json_text(out)
    _out_dir(args).joinpath("assumptions.json").write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK if out["report"]["passed"] else EXIT_VALIDATION


def cmd_solve(args, client) -> int:
    spec = _load_spec(args.config)
    out = client.solve(spec, tolerance=args.tol, max_iters=args.max_iters)
    coords = np.asarray(out["coords"])
    directory = _out_dir(args)
    directory.joinpath("solution.csv").write_text(
        artifacts.solution_csv(coords, out["solution"]), encoding="utf-8"
    )
    directory.joinpath("residuals.csv").write_text(
        artifacts.residuals_csv(out["residual_history"]), encoding="utf-8"
    )
    directory.joinpath("policy.csv").write_text(
        artifacts.policy_csv(coords, out["policy_alpha"], out["policy_beta"]), encoding="utf-8"
    )
    directory.joinpath("report.json").write_text(
        artifacts.json_text(out["report"]), encoding="utf-8"
    )
    rep = out["report"]
    print(
        f"converged={rep['converged']} iterations={rep['iterations']} "
        f"final_residual={rep['final_residual']:.3e}"
    )
    return EXIT_OK if rep["converged"] else EXIT_NUMERIC


def cmd_fraclap_check(args, client) -> int:
    if args.config:
        spec = _load_spec(args.config)
        points, half_width = spec["points"], spec["half_width"]
        extension = spec["extension"]
        tail_value = spec.get("tail_value", 0.0)
        dimension = spec.get("dimension", 1)
    else:
        points, half_width, extension = args.points, args.half_width, args.extension
        tail_value, dimension = 0.0, 1
    oracle = args.oracle or ("cos" if extension == "periodic" else "poisson")
    out = client.fraclap_check(
        points=points, half_width=half_width, dimension=dimension, extension=extension,
        tail_value=tail_value, oracle=oracle, k=args.k, tol=args.tol_check,
    )
    _out_dir(args).joinpath("fraclap_check.csv").write_text(
        artifacts.fraclap_check_csv(out["x"], out["numeric"], out["oracle"]), encoding="utf-8"
    )
    print(f"points={out['points']} max_error={out['max_error']:.3e} l2_error={out['l2_error']:.3e}")
    return EXIT_OK if out["ok"] else EXIT_NUMERIC


def cmd_convolve(args, client) -> int:
    eps = [float(e) for e in args.eps.split(",")]
    if args.solution:
        values = _read_solution_csv(args.solution)
        geometry = {
            "dimension": 1,
            "half_width": args.half_width,
            "points": len(values),
            "extension": args.extension,
            "tail_value": args.tail_value or 0.0,
        }
        out = client.convolve(geometry, eps, values=values)
    else:
        tail = args.tail_value
        if tail is None:
            tail = args.half_width if args.function == "abs" else 0.0
        geometry = {
            "dimension": 1,
            "half_width": args.half_width,
            "points": args.points,
            "extension": args.extension,
            "tail_value": tail,
        }
        out = client.convolve(geometry, eps, function=args.function)
    directory = _out_dir(args)
    for env in out["envelopes"]:
        directory.joinpath(f"convolve_eps_{env['epsilon']:g}.csv").write_text(
            artifacts.convolve_csv(out["x"], out["u"], env["sup_env"], env["inf_env"]),
            encoding="utf-8",
        )
    directory.joinpath("gap_summary.csv").write_text(
        artifacts.gap_summary_csv(
            [e["epsilon"] for e in out["envelopes"]], [e["gap"] for e in out["envelopes"]]
        ),
        encoding="utf-8",
    )
    print("gaps:", ", ".join(f"{e['epsilon']:g}->{e['gap']:.4g}" for e in out["envelopes"]))
    return EXIT_OK if out["ok"] else EXIT_NUMERIC


def _solution_for(args, client, spec) -> list:
    if args.solution:
        return _read_solution_csv(args.solution)
    return client.solve(spec)["solution"]


def cmd_regularity(args, client) -> int:
    spec = _load_spec(args.config)
    solution = _solution_for(args, client, spec)
    kwargs = {"h_cells": [int(c) for c in args.h_list.split(",")]}
    if args.directions:
        kwargs["directions"] = [
            [float(c) for c in d.split(",")] for d in args.directions.split(";")
        ]
    for name in ("A", "B"):
        val = getattr(args, name)
        if val is not None:
            kwargs[name] = val
    if args.lam is not None:
        kwargs["lambda"] = args.lam
    out = client.regularity(spec, solution, **kwargs)
    directory = _out_dir(args)
    directory.joinpath("dq_residuals.csv").write_text(
        artifacts.dq_residuals_csv(out["entries"]), encoding="utf-8"
    )
    directory.joinpath("holder_fit.json").write_text(
        artifacts.json_text(out["holder_fit"]), encoding="utf-8"
    )
    print(f"worst_violation={out['worst_violation']:.3e}")
    return EXIT_OK


def cmd_oscillation(args, client) -> int:
    spec = _load_spec(args.config)
    solution = _solution_for(args, client, spec)
    out = client.oscillation(
        spec, solution, sigma=args.sigma, k_max=args.k_max, slack=args.slack
    )
    directory = _out_dir(args)
    directory.joinpath("cascade.csv").write_text(
        artifacts.cascade_csv(out["cascade"]), encoding="utf-8"
    )
    directory.joinpath("oscillation.json").write_text(artifacts.json_text(out), encoding="utf-8")
    print(f"sigma_star={out['cascade']['sigma_star']:.4f} theta_fit={out['cascade']['theta_fit']:.4f}")
    return EXIT_OK if out["ok"] else EXIT_NUMERIC


def cmd_certify(args, client) -> int:
    out = client.certify(K=args.K, K1=args.K1, C=args.C, lam=args.lam)
    text = artifacts.json_text(out)
    _out_dir(args).joinpath("certificate.json").write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK


def cmd_suite(args, client) -> int:
    suite = load_suite(args.config)
    out_dir = args.out or suite.out_dir or f"{suite.name}-out"
    if args.seed:
        suite.seed = args.seed
    code, _ = run_suite(
        suite, out_dir, client=client, fail_fast=args.fail_fast, threads=_threads(args)
    )
    return code


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "fraclap-check": cmd_fraclap_check,
    "convolve": cmd_convolve,
    "regularity": cmd_regularity,
    "oscillation": cmd_oscillation,
    "certify": cmd_certify,
    "suite": cmd_suite,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return cmd_serve(args)
    try:
        with ServiceClient(base_url=getattr(args, "server_url", None)) as client:
            return COMMANDS[args.command](args, client)
    except NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except errors.FracIsaacsError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
