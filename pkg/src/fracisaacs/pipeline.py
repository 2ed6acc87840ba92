"""Orchestrated diagnostic stages shared by the HTTP service and the suite runner.

Each stage takes core objects, runs one experiment, and returns a plain
JSON-ready dict with an ``ok`` verdict plus the arrays its artifacts need.
"""

from __future__ import annotations

import numpy as np

from .envelopes import inf_convolution, sup_convolution
from .errors import SpecError
from .fraclap import build_quadrature, fraclap
from .grids import DomainGeometry, GridFunction, grid_lipschitz
from .problem import (
    ProblemSpec,
    effective_constants,
    reduce_by_diffusion,
)
from .regularity import (
    diff_quotient,
    dq_residuals,
    holder_fit,
    oscillation_cascade,
    time_lift,
)

FRACLAP_ORACLES = ("cos", "poisson")


def fraclap_check_stage(
    geometry: DomainGeometry,
    oracle: str = "cos",
    k: float = 1.0,
    kappa: float | None = None,
    tail_radius: float | None = None,
    tol: float = 1e-2,
) -> dict:
    """Compare the assembled operator against an analytic oracle.

    ``cos``: eigenfunctions cos(k x) on periodic grids, symbol |k|.
    ``poisson``: u = 1/(1+x^2) against the Poisson-semigroup closed form
    (1 - x^2)/(1 + x^2)^2, for constant tails.
    """
    x = geometry.coords_full()[:, 0]
    if oracle == "cos":
        u = GridFunction(geometry, np.cos(k * x))
        truth = abs(k) * np.cos(k * x)
    elif oracle == "poisson":
        if geometry.dimension != 1:
            raise SpecError("the poisson oracle is one-dimensional")
        u = GridFunction(geometry, 1.0 / (1.0 + x * x))
        truth = (1.0 - x * x) / (1.0 + x * x) ** 2
    else:
        raise SpecError(f"unknown oracle {oracle!r}; choose from {FRACLAP_ORACLES}")
    numeric = fraclap(u, kappa=kappa, tail_radius=tail_radius).values
    err = np.abs(numeric - truth)
    return {
        "x": x.tolist(),
        "numeric": numeric.tolist(),
        "oracle": truth.tolist(),
        "points": geometry.points,
        "max_error": float(err.max()),
        "l2_error": float(np.sqrt(np.mean(err**2))),
        "ok": bool(err.max() <= tol),
    }


def convolve_stage(u: GridFunction, epsilons) -> dict:
    """Sup/inf envelopes per regularization, with ordering and gap checks."""
    eps = sorted((float(e) for e in epsilons), reverse=True)
    if not eps:
        raise SpecError("need at least one epsilon")
    out = []
    ordering_ok = True
    for e in eps:
        se = sup_convolution(u, e)
        ie = inf_convolution(u, e)
        ordering_ok = ordering_ok and bool(
            np.all(ie.envelope.values <= u.values + 1e-12)
            and np.all(u.values <= se.envelope.values + 1e-12)
        )
        out.append(
            {
                "epsilon": e,
                "sup_env": se.envelope.values.tolist(),
                "inf_env": ie.envelope.values.tolist(),
                "gap": float(np.max(np.abs(se.envelope.values - u.values))),
            }
        )
    gaps = [o["gap"] for o in out]
    gaps_ok = all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))
    return {
        "x": u.geometry.coords_full()[:, 0].tolist(),
        "u": u.values.tolist(),
        "envelopes": out,
        "ok": bool(ordering_ok and gaps_ok),
    }


def _default_directions(dimension: int):
    if dimension == 1:
        return [[1.0]]
    return [[1.0, 0.0], [0.0, 1.0]]


def reduced_constants(spec: ProblemSpec, solution: GridFunction, scale: float = 1.0):
    """(A, B, lambda) for the normalized equation, with L measured on the solution."""
    reduced = reduce_by_diffusion(spec)
    L = grid_lipschitz(solution)
    A_eff, B_eff = effective_constants(reduced, L, scale=scale)
    lam = float(reduced.c_tilde.min())
    return A_eff, B_eff, lam, L


def spatial_oscillations(v: GridFunction, radii) -> list:
    """max - min of v over balls B_rho around the origin, per radius."""
    coords = v.geometry.coords_full()
    dist = np.linalg.norm(coords, axis=1)
    out = []
    for rho in radii:
        mask = dist <= rho + 1e-12
        vals = v.values[mask]
        out.append(float(vals.max() - vals.min()) if vals.size >= 2 else 0.0)
    return out


def regularity_stage(
    spec: ProblemSpec,
    solution: GridFunction,
    h_cells=(1, 2, 4),
    directions=None,
    A: float | None = None,
    B: float | None = None,
    lam: float | None = None,
    fit_levels: int = 6,
) -> dict:
    """Difference-quotient inequality residuals plus a spatial Hölder fit.

    Constants default to the normalized equation's effective bounds with
    the solution's measured Lipschitz constant.
    """
    geo = spec.geometry
    A0, B0, lam0, L = reduced_constants(spec, solution)
    A = A0 if A is None else float(A)
    B = B0 if B is None else float(B)
    lam = lam0 if lam is None else float(lam)
    directions = directions if directions else _default_directions(geo.dimension)
    if not list(h_cells):
        raise SpecError("need at least one difference-quotient step")
    quad = build_quadrature(geo)
    entries = []
    finest = None
    for cells in sorted(int(c) for c in h_cells):
        if cells < 1:
            raise SpecError("h must be a positive number of grid cells")
        h = cells * geo.spacing
        for ell in directions:
            dq = diff_quotient(solution, h, ell)
            sub, sup = dq_residuals(dq.values, A, B, lam, quad=quad)
            entries.append(
                {
                    "h": h,
                    "direction": "/".join(f"{c:g}" for c in ell),
                    "sub_violation": sub,
                    "super_violation": sup,
                }
            )
            if finest is None:
                finest = dq.values
    radii = [geo.half_width / 2.0 * 0.5**j for j in range(fit_levels)]
    oscs = spatial_oscillations(finest, radii)
    try:
        fit = holder_fit(radii, oscs).to_dict()
    except Exception:
        fit = None
    worst = max(max(e["sub_violation"], e["super_violation"]) for e in entries)
    return {
        "entries": entries,
        "A": A,
        "B": B,
        "lambda": lam,
        "L_measured": L,
        "holder_fit": fit,
        "worst_violation": worst,
        "ok": bool(np.isfinite(worst)),
    }


def oscillation_stage(
    spec: ProblemSpec,
    solution: GridFunction,
    h_cells: int = 1,
    direction=None,
    sigma: float = 0.5,
    k_max: int = 4,
    slack: float = 0.1,
    n_times: int = 257,
    A: float | None = None,
) -> dict:
    """Cascade on the normalized, time-lifted difference quotient of a solution.

    The quotient is scaled by 1/(2 sup|v| + 2) so it is bounded by 1/2, then
    lifted by e^{lambda t} on t in [-2, 0]; oscillations are measured over
    Q_{r^k} with r = 1/(4+4A).
    """
    geo = spec.geometry
    A0, _, lam, _ = reduced_constants(spec, solution)
    A = A0 if A is None else float(A)
    direction = direction if direction is not None else _default_directions(geo.dimension)[0]
    dq = diff_quotient(solution, int(h_cells) * geo.spacing, direction)
    v = dq.values
    scale = 2.0 * float(np.max(np.abs(v.values))) + 2.0
    xi0 = GridFunction(geo, v.values / scale)
    field = time_lift(xi0, lam, np.linspace(-2.0, 0.0, int(n_times)))
    table = oscillation_cascade(field, A=A, sigma=sigma, k_max=k_max, slack=slack)
    return {
        "cascade": table.to_dict(),
        "normalization": scale,
        "lambda": lam,
        "A": A,
        "ok": bool(table.sigma_star > 0.0),
    }
