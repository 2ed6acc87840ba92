"""Experiment suites: ordered stage pipelines over problem-spec files.

The runner is a service client: every stage is one endpoint call, and all
artifact files (CSV for fields, JSON for scalar reports) are written on
the client side, one subdirectory per spec.  A fixed seed is recorded in
the manifest and threaded to any randomized stage; all current stages are
deterministic, so fixed inputs give byte-identical CSV artifacts.
"""

from __future__ import annotations

import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, artifacts, errors
from .client import ServiceClient

STAGES = ("validate", "solve", "fraclap-check", "convolve", "regularity", "oscillation", "certify")
NEEDS_SOLUTION = ("regularity", "oscillation")


@dataclass
class ExperimentSuite:
    name: str
    specs: list
    pipeline: list
    seed: int = 0
    out_dir: str | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        unknown = [s for s in self.pipeline if s not in STAGES]
        if unknown:
            raise errors.SpecError(f"unknown pipeline stages: {unknown}")
        for stage in NEEDS_SOLUTION:
            if stage in self.pipeline:
                if "solve" not in self.pipeline or self.pipeline.index(
                    "solve"
                ) > self.pipeline.index(stage):
                    raise errors.SpecError(f"stage {stage!r} requires 'solve' earlier in the pipeline")
        if not self.specs:
            raise errors.SpecError("suite needs at least one spec path")


def load_suite(path) -> ExperimentSuite:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise errors.SpecError(f"cannot parse suite file {path}: {exc}") from exc
    known = {"name", "specs", "pipeline", "seed", "out_dir"}
    try:
        return ExperimentSuite(
            name=data.get("name", Path(path).stem),
            specs=list(data["specs"]),
            pipeline=list(data["pipeline"]),
            seed=int(data.get("seed", 0)),
            out_dir=data.get("out_dir"),
            options={k: v for k, v in data.items() if k not in known},
        )
    except KeyError as exc:
        raise errors.SpecError(f"suite file missing field {exc.args[0]!r}") from exc


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


class _StageRunner:
    def __init__(self, client: ServiceClient, spec_path: Path, spec_dict: dict, out: Path, opts: dict):
        self.client = client
        self.spec_path = spec_path
        self.spec = spec_dict
        self.out = out
        self.opts = opts
        self.solution = None
        self.validate_payload = None

    def run(self, stage: str):
        return getattr(self, "stage_" + stage.replace("-", "_"))()

    def stage_validate(self):
        out = self.client.validate(self.spec)
        self.validate_payload = out
        _write(self.out / "assumptions.json", artifacts.json_text(out))
        return out["report"]["passed"], {"passed": out["report"]["passed"]}, ["assumptions.json"]

    def stage_solve(self):
        out = self.client.solve(
            self.spec,
            tolerance=self.opts.get("tolerance", 1e-8),
            max_iters=self.opts.get("max_iters", 50_000),
        )
        self.solution = out["solution"]
        coords = np.asarray(out["coords"])
        _write(self.out / "solution.csv", artifacts.solution_csv(coords, out["solution"]))
        _write(self.out / "residuals.csv", artifacts.residuals_csv(out["residual_history"]))
        _write(
            self.out / "policy.csv",
            artifacts.policy_csv(coords, out["policy_alpha"], out["policy_beta"]),
        )
        _write(self.out / "report.json", artifacts.json_text(out["report"]))
        ok = out["report"]["converged"] and out["report"]["bracket_ok"]
        detail = {
            "iterations": out["report"]["iterations"],
            "final_residual": out["report"]["final_residual"],
        }
        return ok, detail, ["solution.csv", "residuals.csv", "policy.csv", "report.json"]

    def stage_fraclap_check(self):
        oracle = "cos" if self.spec["extension"] == "periodic" else "poisson"
        out = self.client.fraclap_check(
            points=self.spec["points"],
            half_width=self.spec["half_width"],
            dimension=self.spec.get("dimension", 1),
            extension=self.spec["extension"],
            tail_value=self.spec.get("tail_value", 0.0),
            oracle=self.opts.get("fraclap_oracle", oracle),
            k=self.opts.get("fraclap_k", 1.0),
            tol=self.opts.get("fraclap_tol", 1e-2),
        )
        _write(
            self.out / "fraclap_check.csv",
            artifacts.fraclap_check_csv(out["x"], out["numeric"], out["oracle"]),
        )
        return out["ok"], {"max_error": out["max_error"], "l2_error": out["l2_error"]}, [
            "fraclap_check.csv"
        ]

    def stage_convolve(self):
        geometry = {
            k: self.spec[k]
            for k in ("dimension", "half_width", "points", "extension")
            if k in self.spec
        }
        geometry["tail_value"] = self.spec.get("tail_value", 0.0)
        eps = self.opts.get("epsilons", [0.4, 0.2, 0.1])
        if self.solution is not None:
            out = self.client.convolve(geometry, eps, values=self.solution)
        else:
            out = self.client.convolve(geometry, eps, function="abs")
        files = []
        for env in out["envelopes"]:
            name = f"convolve_eps_{env['epsilon']:g}.csv"
            _write(
                self.out / name,
                artifacts.convolve_csv(out["x"], out["u"], env["sup_env"], env["inf_env"]),
            )
            files.append(name)
        _write(
            self.out / "gap_summary.csv",
            artifacts.gap_summary_csv(
                [e["epsilon"] for e in out["envelopes"]], [e["gap"] for e in out["envelopes"]]
            ),
        )
        files.append("gap_summary.csv")
        return out["ok"], {"gaps": [e["gap"] for e in out["envelopes"]]}, files

    def _require_solution(self):
        if self.solution is None:
            raise errors.NumericFailure("no solution available: the solve stage did not succeed")

    def stage_regularity(self):
        self._require_solution()
        out = self.client.regularity(
            self.spec,
            self.solution,
            h_cells=self.opts.get("h_cells", [1, 2, 4]),
        )
        _write(self.out / "dq_residuals.csv", artifacts.dq_residuals_csv(out["entries"]))
        _write(self.out / "holder_fit.json", artifacts.json_text(out["holder_fit"]))
        return out["ok"], {"worst_violation": out["worst_violation"]}, [
            "dq_residuals.csv",
            "holder_fit.json",
        ]

    def stage_oscillation(self):
        self._require_solution()
        out = self.client.oscillation(
            self.spec,
            self.solution,
            sigma=self.opts.get("sigma", 0.5),
            k_max=self.opts.get("k_max", 4),
            slack=self.opts.get("slack", 0.1),
        )
        _write(self.out / "cascade.csv", artifacts.cascade_csv(out["cascade"]))
        _write(self.out / "oscillation.json", artifacts.json_text(out))
        return out["ok"], {"sigma_star": out["cascade"]["sigma_star"]}, [
            "cascade.csv",
            "oscillation.json",
        ]

    def stage_certify(self):
        if self.validate_payload is None:
            self.validate_payload = self.client.validate(self.spec)
        rep = self.validate_payload["report"]
        out = self.client.certify(
            K=rep["K"],
            K1=rep["K1"],
            C=self.opts.get("certify_C", 0.0),
            lam=rep["lambda"],
        )
        _write(self.out / "certificate.json", artifacts.json_text(out))
        return True, {"K_tilde": out["K_tilde"]}, ["certificate.json"]


def run_suite(
    suite: ExperimentSuite,
    out_dir,
    client: ServiceClient | None = None,
    fail_fast: bool = False,
    threads: int = 1,
    log=None,
) -> tuple:
    """Execute the pipeline per spec; returns (exit_code, manifest_dict)."""
    log = log or (lambda msg: print(msg, file=sys.stderr))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    own_client = client is None
    client = client or ServiceClient()
    manifest = {
        "name": suite.name,
        "seed": suite.seed,
        "threads": threads,
        "versions": {
            "fracisaacs": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
        "input_hashes": {},
        "stages": [],
    }
    exit_code = 0
    try:
        for spec_path in suite.specs:
            spec_path = Path(spec_path)
            try:
                with open(spec_path, "r", encoding="utf-8") as fh:
                    spec_dict = json.load(fh)
                manifest["input_hashes"][str(spec_path)] = _sha256(spec_path)
            except (OSError, json.JSONDecodeError) as exc:
                raise errors.SpecError(f"cannot parse spec file {spec_path}: {exc}") from exc
            runner = _StageRunner(client, spec_path, spec_dict, out / spec_path.stem, suite.options)
            for stage in suite.pipeline:
                t0 = time.perf_counter()
                entry = {"spec": str(spec_path), "stage": stage}
                try:
                    ok, detail, files = runner.run(stage)
                    entry.update(
                        status="pass" if ok else "fail",
                        detail=detail,
                        artifacts=[f"{spec_path.stem}/{f}" for f in files],
                    )
                    if not ok:
                        exit_code = max(exit_code, 2)
                except errors.FracIsaacsError as exc:
                    entry.update(status="error", detail={"error": type(exc).__name__, "message": str(exc)})
                    code = 2 if isinstance(exc, (errors.NumericFailure, errors.ThresholdError, errors.SizeCapError)) else 1
                    exit_code = max(exit_code, code)
                entry["wall_time_s"] = time.perf_counter() - t0
                manifest["stages"].append(entry)
                log(f"[{suite.name}] {spec_path.stem}/{stage}: {entry['status']}")
                if entry["status"] != "pass" and fail_fast:
                    raise _FailFast()
    except _FailFast:
        pass
    finally:
        if own_client:
            client.close()
    manifest["ok"] = all(s["status"] == "pass" for s in manifest["stages"])
    _write(out / "manifest.json", artifacts.json_text(manifest))
    return exit_code, manifest


class _FailFast(Exception):
    pass
