"""Monotone upwind discretization and damped pseudo-time iteration.

The discrete residual at node x is

    max_a min_b [ f_ab + c_ab u(x) + b_ab . D_up u(x) + a_ab L u(x) ],

with D_up the upwind difference (backward where the drift component is
positive, forward where it is negative) and L the assembled half-Laplacian.
Each control pair's linear operator then has nonnegative off-diagonal
weights, so the explicit update u <- u - dt * residual(u) is order
preserving whenever dt satisfies the CFL rule

    dt <= cfl_safety * h / (max|b| + a_max * c_norm * S_h + c_max * h),

with S_h the (scaled) row sum of the half-Laplacian weights.  Under that
rule every sweep contracts the sup norm by at least (1 - dt*lambda),
driving the iterate from the zero start toward the unique fixed point
inside the constant barriers -M/lambda <= u <= M/lambda.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionError, PreconditionError, SpecError
from .fraclap import KernelQuadrature, build_quadrature
from .grids import GridFunction, require_same_geometry
from .problem import ProblemSpec, bracket_bounds, validate_assumptions


@dataclass(frozen=True)
class SchemeConfig:
    """Iteration knobs for the damped pseudo-time scheme."""

    tolerance: float = 1e-8
    max_iters: int = 50_000
    cfl_safety: float = 0.9
    damping: str = "cfl"
    dt: float | None = None

    def __post_init__(self):
        if not (self.tolerance > 0):
            raise SpecError("tolerance must be positive")
        if not (0 < self.cfl_safety < 1):
            raise SpecError("cfl_safety must lie in (0, 1)")
        if self.damping not in ("cfl", "fixed"):
            raise SpecError("damping must be 'cfl' or 'fixed'")
        if self.damping == "fixed" and not (self.dt and self.dt > 0):
            raise SpecError("fixed damping needs a positive dt")
        if self.max_iters < 1:
            raise SpecError("max_iters must be at least 1")


@dataclass(frozen=True)
class SolverReport:
    """Solution, convergence history, saddle policies, and bracket status."""

    solution: GridFunction
    residual_history: np.ndarray = field(repr=False)
    policy_alpha: tuple
    policy_beta: tuple
    bracket_ok: bool
    iterations: int
    converged: bool
    final_residual: float
    dt: float
    tolerance: float
    lambda_: float
    M: float
    bracket: tuple

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "final_residual": self.final_residual,
            "dt": self.dt,
            "tolerance": self.tolerance,
            "lambda": self.lambda_,
            "M": self.M,
            "bracket_lower": self.bracket[0],
            "bracket_upper": self.bracket[1],
            "bracket_ok": self.bracket_ok,
        }


class _Scheme:
    """Precomputed tables and operators shared by every sweep."""

    def __init__(self, spec: ProblemSpec, quad: KernelQuadrature | None = None):
        self.spec = spec
        self.geo = spec.geometry
        if quad is None:
            quad = build_quadrature(self.geo)
        else:
            require_same_geometry(quad.geometry, self.geo)
        self.quad = quad
        co = spec.coefficients
        self.a = co.a
        self.b = co.b
        self.c = co.c
        self.f = co.f
        self.h = self.geo.spacing

    def upwind_term(self, w: np.ndarray) -> np.ndarray:
        """b . D_up w per control pair, shape (n_alpha, n_beta, nodes)."""
        geo = self.geo
        out = np.zeros(self.c.shape)
        for ax in range(geo.dimension):
            cells = [0] * geo.dimension
            cells[ax] = 1
            fwd = (geo.shift(w, cells) - w) / self.h
            cells[ax] = -1
            bwd = (w - geo.shift(w, cells)) / self.h
            bax = self.b[..., ax]
            out += np.where(bax > 0, bax * bwd[None, None, :], bax * fwd[None, None, :])
        return out

    def operand_values(self, w: np.ndarray) -> np.ndarray:
        lu = self.quad.apply(w)
        return self.f + self.c * w[None, None, :] + self.upwind_term(w) + self.a * lu[None, None, :]

    def residual(self, w: np.ndarray) -> np.ndarray:
        return self.operand_values(w).min(axis=1).max(axis=0)

    def residual_and_policies(self, w: np.ndarray):
        vals = self.operand_values(w)
        inner = vals.min(axis=1)
        ai = inner.argmax(axis=0)
        res = np.take_along_axis(inner, ai[None, :], axis=0)[0]
        per_alpha = np.take_along_axis(
            vals, ai[None, None, :], axis=0
        )[0]  # (n_beta, nodes) at the chosen alpha
        bi = per_alpha.argmin(axis=0)
        return res, ai, bi

    def cfl_dt(self, cfl_safety: float) -> float:
        max_b = float(np.abs(self.b).sum(axis=-1).max())
        a_max = float(self.a.max())
        c_max = float(self.c.max())
        h = self.h
        denom = max_b + a_max * self.quad.c_norm * self.quad.s_h + c_max * h
        if denom <= 0:
            raise SpecError("degenerate CFL denominator")
        return cfl_safety * h / denom


def residual(u: GridFunction, spec: ProblemSpec, quad: KernelQuadrature | None = None) -> GridFunction:
    """Max-min residual of the discrete equation at every node."""
    require_same_geometry(u.geometry, spec.geometry)
    scheme = _Scheme(spec, quad)
    return GridFunction.from_independent(spec.geometry, scheme.residual(u.independent))


def solve(spec: ProblemSpec, config: SchemeConfig | None = None) -> SolverReport:
    """Damped pseudo-time iteration from the zero start, bracketed by +-M/lambda.

    Non-convergence within max_iters is reported (converged=False), not
    raised; a failing assumption check is an error.
    """
    config = config or SchemeConfig()
    report = validate_assumptions(spec)
    if not report.passed:
        raise AssumptionError(
            "assumption check failed: " + "; ".join(report.reasons), reasons=report.reasons
        )
    lo, hi = bracket_bounds(report)
    scheme = _Scheme(spec)
    dt = scheme.cfl_dt(config.cfl_safety) if config.damping == "cfl" else float(config.dt)

    w = np.clip(np.zeros(spec.geometry.n_independent), lo, hi)
    history = []
    converged = False
    for _ in range(config.max_iters):
        res = scheme.residual(w)
        sup = float(np.max(np.abs(res)))
        history.append(sup)
        if sup <= config.tolerance:
            converged = True
            break
        w = w - dt * res

    res, ai, bi = scheme.residual_and_policies(w)
    final = float(np.max(np.abs(res)))
    alphas = spec.controls.alphas
    betas = spec.controls.betas
    pol_a = spec.geometry.expand(ai.astype(float)).astype(int)
    pol_b = spec.geometry.expand(bi.astype(float)).astype(int)
    solution = GridFunction.from_independent(spec.geometry, w)
    bracket_ok = bool(
        np.all(solution.values >= lo - config.tolerance)
        and np.all(solution.values <= hi + config.tolerance)
    )
    return SolverReport(
        solution=solution,
        residual_history=np.asarray(history),
        policy_alpha=tuple(alphas[i] for i in pol_a),
        policy_beta=tuple(betas[i] for i in pol_b),
        bracket_ok=bracket_ok,
        iterations=len(history),
        converged=converged,
        final_residual=final,
        dt=dt,
        tolerance=config.tolerance,
        lambda_=report.lambda_,
        M=report.M,
        bracket=(lo, hi),
    )


@dataclass(frozen=True)
class ComparisonResult:
    ok: bool
    worst_gap: float
    slack: float
    sub_residual_max: float
    super_residual_min: float

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "worst_gap": self.worst_gap,
            "slack": self.slack,
            "sub_residual_max": self.sub_residual_max,
            "super_residual_min": self.super_residual_min,
        }


def comparison_check(
    spec: ProblemSpec,
    u_sub: GridFunction,
    u_super: GridFunction,
    tol: float = 1e-8,
    slack_constant: float = 2.0,
    quad: KernelQuadrature | None = None,
) -> ComparisonResult:
    """Discrete comparison: a tol-subsolution must stay below a tol-supersolution.

    slack = slack_constant * tol / lambda accounts for the tolerance each
    side is allowed in its residual sign.
    """
    require_same_geometry(u_sub.geometry, spec.geometry)
    require_same_geometry(u_super.geometry, spec.geometry)
    report = validate_assumptions(spec, require_positive_diffusion=False)
    if report.lambda_ <= 0:
        raise AssumptionError("comparison needs lambda > 0", reasons=("A3 violated",))
    scheme = _Scheme(spec, quad)
    r_sub = scheme.residual(u_sub.independent)
    r_super = scheme.residual(u_super.independent)
    bad_sub = np.flatnonzero(r_sub > tol)
    bad_super = np.flatnonzero(r_super < -tol)
    if bad_sub.size or bad_super.size:
        offenders = [("sub", int(i), float(r_sub[i])) for i in bad_sub[:10]]
        offenders += [("super", int(i), float(r_super[i])) for i in bad_super[:10]]
        raise PreconditionError(
            f"precondition violated: {bad_sub.size} nodes break the subsolution bound, "
            f"{bad_super.size} the supersolution bound",
            offenders=offenders,
        )
    slack = slack_constant * tol / report.lambda_
    gap = float(np.max(u_sub.independent - u_super.independent))
    return ComparisonResult(
        ok=bool(gap <= slack),
        worst_gap=gap,
        slack=slack,
        sub_residual_max=float(np.max(r_sub)),
        super_residual_min=float(np.min(r_super)),
    )
