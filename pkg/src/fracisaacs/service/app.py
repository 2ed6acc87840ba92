"""FastAPI service exposing the solver and the regularity lab.

All endpoints are stateless: requests carry the full problem data, and
responses carry the arrays the client needs to write its artifacts.
Package errors surface as HTTP 422 with the exception class name, so thin
clients can re-raise them faithfully.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, errors
from ..grids import DomainGeometry, GridFunction
from ..pipeline import convolve_stage, fraclap_check_stage, oscillation_stage, regularity_stage
from ..problem import bracket_bounds, spec_from_dict, validate_assumptions
from ..regularity import lipschitz_certificate
from ..solver import SchemeConfig, solve
from . import models


def _geometry(model: models.GeometryModel) -> DomainGeometry:
    return DomainGeometry(
        dimension=model.dimension,
        half_width=model.half_width,
        points=model.points,
        extension=model.extension,
        tail_value=model.tail_value,
    )


def _spec(model: models.ProblemSpecModel):
    return spec_from_dict(model.model_dump())


def create_app() -> FastAPI:
    app = FastAPI(title="fracisaacs", version=__version__)

    @app.exception_handler(errors.FracIsaacsError)
    async def _package_error(request: Request, exc: errors.FracIsaacsError):
        return JSONResponse(
            status_code=422,
            content={"error": type(exc).__name__, "message": str(exc)},
        )

    @app.get("/health", response_model=models.HealthResponse)
    def health():
        return models.HealthResponse(status="ok", version=__version__)

    @app.post("/validate", response_model=models.ValidateResponse)
    def validate(req: models.ValidateRequest):
        spec = _spec(req.spec)
        report = validate_assumptions(spec)
        lo, hi = (None, None)
        if report.lambda_ > 0:
            lo, hi = bracket_bounds(report)
        return models.ValidateResponse(
            report=models.AssumptionReportModel(**report.to_dict()),
            bracket_lower=lo,
            bracket_upper=hi,
        )

    @app.post("/solve", response_model=models.SolveResponse)
    def solve_endpoint(req: models.SolveRequest):
        spec = _spec(req.spec)
        config = SchemeConfig(
            tolerance=req.tolerance, max_iters=req.max_iters, cfl_safety=req.cfl_safety
        )
        rep = solve(spec, config)
        return models.SolveResponse(
            coords=spec.geometry.coords_full().tolist(),
            solution=rep.solution.values.tolist(),
            residual_history=rep.residual_history.tolist(),
            policy_alpha=list(rep.policy_alpha),
            policy_beta=list(rep.policy_beta),
            report=models.SolveReportModel(**rep.to_dict()),
        )

    @app.post("/fraclap-check", response_model=models.FraclapCheckResponse)
    def fraclap_check(req: models.FraclapCheckRequest):
        geo = DomainGeometry(
            dimension=req.dimension,
            half_width=req.half_width,
            points=req.points,
            extension=req.extension,
            tail_value=req.tail_value,
        )
        out = fraclap_check_stage(
            geo, oracle=req.oracle, k=req.k, kappa=req.kappa,
            tail_radius=req.tail_radius, tol=req.tol,
        )
        return models.FraclapCheckResponse(**out)

    @app.post("/convolve", response_model=models.ConvolveResponse)
    def convolve(req: models.ConvolveRequest):
        geo = _geometry(req.geometry)
        if req.values is not None:
            u = GridFunction(geo, np.asarray(req.values, dtype=float))
        elif req.function == "abs":
            u = GridFunction(geo, np.abs(geo.coords_full()[:, 0]))
        elif req.function == "cos":
            u = GridFunction(geo, np.cos(geo.coords_full()[:, 0]))
        else:
            raise errors.SpecError("convolve needs either values or a named function")
        out = convolve_stage(u, req.epsilons)
        return models.ConvolveResponse(**out)

    @app.post("/regularity", response_model=models.RegularityResponse)
    def regularity(req: models.RegularityRequest):
        spec = _spec(req.spec)
        u = GridFunction(spec.geometry, np.asarray(req.solution, dtype=float))
        out = regularity_stage(
            spec,
            u,
            h_cells=req.h_cells,
            directions=req.directions,
            A=req.A,
            B=req.B,
            lam=req.lam,
            fit_levels=req.fit_levels,
        )
        return models.RegularityResponse(**out)

    @app.post("/oscillation", response_model=models.OscillationResponse)
    def oscillation(req: models.OscillationRequest):
        spec = _spec(req.spec)
        u = GridFunction(spec.geometry, np.asarray(req.solution, dtype=float))
        out = oscillation_stage(
            spec,
            u,
            h_cells=req.h_cells,
            direction=req.direction,
            sigma=req.sigma,
            k_max=req.k_max,
            slack=req.slack,
            n_times=req.n_times,
            A=req.A,
        )
        return models.OscillationResponse(**out)

    @app.post("/certify", response_model=models.CertificateModel)
    def certify(req: models.CertifyRequest):
        cert = lipschitz_certificate(req.K, req.K1, req.C, req.lam)
        return models.CertificateModel(**cert.to_dict())

    return app
