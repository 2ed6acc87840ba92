"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field


class GeometryModel(BaseModel):
    dimension: int = 1
    half_width: float
    points: int
    extension: Literal["periodic", "constant_tail"] = "periodic"
    tail_value: float = 0.0


class ProblemSpecModel(GeometryModel):
    alphas: list[str]
    betas: list[str]
    coefficients: dict[str, Any]


class AssumptionReportModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    K: float
    lam: float = Field(alias="lambda")
    lambda1: float
    K1: float
    lambda0: float
    M: float
    A_eff: float
    B_eff: float
    L_ref: float
    passed: bool
    reasons: list[str]


class ValidateRequest(BaseModel):
    spec: ProblemSpecModel


class ValidateResponse(BaseModel):
    report: AssumptionReportModel
    bracket_lower: Optional[float] = None
    bracket_upper: Optional[float] = None


class SolveRequest(BaseModel):
    spec: ProblemSpecModel
    tolerance: float = 1e-8
    max_iters: int = 50_000
    cfl_safety: float = 0.9


class SolveReportModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    iterations: int
    converged: bool
    final_residual: float
    dt: float
    tolerance: float
    lam: float = Field(alias="lambda")
    M: float
    bracket_lower: float
    bracket_upper: float
    bracket_ok: bool


class SolveResponse(BaseModel):
    coords: list[list[float]]
    solution: list[float]
    residual_history: list[float]
    policy_alpha: list[str]
    policy_beta: list[str]
    report: SolveReportModel


class FraclapCheckRequest(BaseModel):
    points: int
    half_width: float
    dimension: int = 1
    extension: Literal["periodic", "constant_tail"] = "periodic"
    tail_value: float = 0.0
    oracle: Literal["cos", "poisson"] = "cos"
    k: float = 1.0
    kappa: Optional[float] = None
    tail_radius: Optional[float] = None
    tol: float = 1e-2


class FraclapCheckResponse(BaseModel):
    x: list[float]
    numeric: list[float]
    oracle: list[float]
    points: int
    max_error: float
    l2_error: float
    ok: bool


class ConvolveRequest(BaseModel):
    geometry: GeometryModel
    epsilons: list[float]
    values: Optional[list[float]] = None
    function: Optional[Literal["abs", "cos"]] = None


class EnvelopePayload(BaseModel):
    epsilon: float
    sup_env: list[float]
    inf_env: list[float]
    gap: float


class ConvolveResponse(BaseModel):
    x: list[float]
    u: list[float]
    envelopes: list[EnvelopePayload]
    ok: bool


class RegularityRequest(BaseModel):
    spec: ProblemSpecModel
    solution: list[float]
    h_cells: list[int] = [1, 2, 4]
    directions: Optional[list[list[float]]] = None
    A: Optional[float] = None
    B: Optional[float] = None
    lam: Optional[float] = Field(default=None, alias="lambda")
    fit_levels: int = 6

    model_config = ConfigDict(populate_by_name=True)


class DqEntryModel(BaseModel):
    h: float
    direction: str
    sub_violation: float
    super_violation: float


class HolderFitModel(BaseModel):
    sigma: float
    constant: float
    residual: float


class RegularityResponse(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    entries: list[DqEntryModel]
    A: float
    B: float
    lam: float = Field(alias="lambda")
    L_measured: float
    holder_fit: Optional[HolderFitModel]
    worst_violation: float
    ok: bool


class OscillationRequest(BaseModel):
    spec: ProblemSpecModel
    solution: list[float]
    h_cells: int = 1
    direction: Optional[list[float]] = None
    sigma: float = 0.5
    k_max: int = 4
    slack: float = 0.1
    n_times: int = 257
    A: Optional[float] = None


class CascadeRowModel(BaseModel):
    k: int
    radius: float
    oscillation: float
    envelope: float
    passed: bool
    resolved: bool


class CascadeModel(BaseModel):
    r: float
    sigma: float
    sigma_star: float
    theta_fit: float
    slack: float
    measure_fraction: Optional[float]
    rows: list[CascadeRowModel]


class OscillationResponse(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    cascade: CascadeModel
    normalization: float
    lam: float = Field(alias="lambda")
    A: float
    ok: bool


class CertifyRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    K: float
    K1: float
    C: float
    lam: float = Field(alias="lambda")


class CertificateModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    K: float
    K1: float
    C: float
    lam: float = Field(alias="lambda")
    gamma_star: float
    K_tilde: float


class HealthResponse(BaseModel):
    status: str
    version: str
