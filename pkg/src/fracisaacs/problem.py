"""Equation data: control sets, tabulated coefficients, structural checks, reductions.

The equation under study is, at every grid node x,

    max_a min_b [ f_ab(x) + c_ab(x) u(x) + b_ab(x) . grad u(x)
                  + a_ab(x) (-lap)^{1/2} u(x) ] = 0,

with finite control lists (so sup-inf is an exact max-min) and coefficients
tabulated on the grid.  Structural requirements measured here:

* boundedness and Lipschitz continuity of all tables (constant K),
* a positive floor lambda under c (drives comparison and the solution
  bracket +-M/lambda),
* a positive floor lambda_1 under a (allows dividing the equation by a),
* the largeness threshold lambda > lambda_0 = 2*K1, with K1 the Lipschitz
  seminorm of the drift table, which the Lipschitz certificate requires.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AssumptionError, SpecError
from .grids import DomainGeometry, GridFunction

COEFF_NAMES = ("a", "b", "c", "f")


@dataclass(frozen=True)
class ControlGrid:
    """Finite label lists for the two control sets."""

    alphas: tuple
    betas: tuple

    def __post_init__(self):
        alphas = tuple(str(a) for a in self.alphas)
        betas = tuple(str(b) for b in self.betas)
        if not alphas or not betas:
            raise SpecError("control lists must be non-empty")
        if len(set(alphas)) != len(alphas) or len(set(betas)) != len(betas):
            raise SpecError("control labels must be unique")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "betas", betas)

    @property
    def shape(self) -> tuple:
        return (len(self.alphas), len(self.betas))


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class CoefficientField:
    """Tables over (alpha, beta, independent node); b carries one component per axis."""

    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    c: np.ndarray = field(repr=False)
    f: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in COEFF_NAMES:
            arr = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(arr)):
                raise SpecError(f"non-finite coefficient in table {name!r}")
            object.__setattr__(self, name, _freeze(arr))
        if self.a.ndim != 3:
            raise SpecError("incomplete coefficient table: a, c, f must be (alpha, beta, node)")
        na, nb, m = self.a.shape
        if self.c.shape != (na, nb, m) or self.f.shape != (na, nb, m):
            raise SpecError("incomplete coefficient table: a, c, f shapes differ")
        if self.b.ndim != 4 or self.b.shape[:3] != (na, nb, m):
            raise SpecError("incomplete coefficient table: b must be (alpha, beta, node, dim)")


@dataclass(frozen=True)
class ProblemSpec:
    """Geometry, control sets, and coefficient tables for one equation."""

    geometry: DomainGeometry
    controls: ControlGrid
    coefficients: CoefficientField

    def __post_init__(self):
        na, nb = self.controls.shape
        m = self.geometry.n_independent
        if self.coefficients.a.shape != (na, nb, m):
            raise SpecError(
                "incomplete coefficient table: expected "
                f"{(na, nb, m)} entries, got {self.coefficients.a.shape}"
            )
        if self.coefficients.b.shape[3] != self.geometry.dimension:
            raise SpecError("coefficient table b has wrong number of components")

    @classmethod
    def from_tables(cls, geometry, controls, a, b, c, f) -> "ProblemSpec":
        """Tables given on the full grid (duplicates included) or already independent."""
        na, nb = controls.shape

        def prep(arr, vector=False):
            arr = np.asarray(arr, dtype=float)
            if vector and arr.ndim == 3:
                arr = arr[..., None]
            if arr.ndim != (4 if vector else 3):
                raise SpecError(
                    f"incomplete coefficient table: expected a (alpha, beta, node"
                    f"{', axis' if vector else ''}) array, got shape {arr.shape}"
                )
            if arr.shape[2] == geometry.n_independent:
                return arr
            if arr.shape[2] != geometry.n_nodes:
                raise SpecError(
                    f"incomplete coefficient table: got {arr.shape[2]} nodes, expected "
                    f"{geometry.n_nodes} (full) or {geometry.n_independent} (independent)"
                )
            comps = arr.shape[3] if vector else 1
            out = np.empty(arr.shape[:2] + (geometry.n_independent, comps))
            for i in range(na):
                for j in range(nb):
                    for d in range(comps):
                        col = arr[i, j, :, d] if vector else arr[i, j]
                        out[i, j, :, d] = geometry.restrict(col)
            return out if vector else out[..., 0]

        return cls(
            geometry=geometry,
            controls=controls,
            coefficients=CoefficientField(
                a=prep(a), b=prep(b, vector=True), c=prep(c), f=prep(f)
            ),
        )

    @classmethod
    def constant(cls, geometry, a=1.0, b=0.0, c=1.0, f=0.0, controls=None) -> "ProblemSpec":
        """Single-control problem with spatially constant coefficients."""
        controls = controls or ControlGrid(("a0",), ("b0",))
        na, nb = controls.shape
        m = geometry.n_independent
        bvec = np.atleast_1d(np.asarray(b, dtype=float))
        if bvec.size != geometry.dimension:
            raise SpecError("constant drift needs one component per axis")
        return cls(
            geometry=geometry,
            controls=controls,
            coefficients=CoefficientField(
                a=np.full((na, nb, m), float(a)),
                b=np.broadcast_to(bvec, (na, nb, m, geometry.dimension)).copy(),
                c=np.full((na, nb, m), float(c)),
                f=np.full((na, nb, m), float(f)),
            ),
        )


@dataclass(frozen=True)
class AssumptionReport:
    """Measured structural bounds and the pass verdict."""

    K: float
    lambda_: float
    lambda1: float
    K1: float
    lambda0: float
    M: float
    A_eff: float
    B_eff: float
    L_ref: float
    passed: bool
    reasons: tuple

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "lambda": self.lambda_,
            "lambda1": self.lambda1,
            "K1": self.K1,
            "lambda0": self.lambda0,
            "M": self.M,
            "A_eff": self.A_eff,
            "B_eff": self.B_eff,
            "L_ref": self.L_ref,
            "passed": self.passed,
            "reasons": list(self.reasons),
        }


@dataclass(frozen=True)
class ReducedProblem:
    """Tables divided by the diffusion coefficient (a == 1), plus optional frozen g."""

    geometry: DomainGeometry
    controls: ControlGrid
    f_tilde: np.ndarray = field(repr=False)
    c_tilde: np.ndarray = field(repr=False)
    b_tilde: np.ndarray = field(repr=False)
    frozen_g: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "f_tilde", _freeze(self.f_tilde))
        object.__setattr__(self, "c_tilde", _freeze(self.c_tilde))
        object.__setattr__(self, "b_tilde", _freeze(self.b_tilde))
        if self.frozen_g is not None:
            object.__setattr__(self, "frozen_g", _freeze(self.frozen_g))

    def as_problem_spec(self) -> ProblemSpec:
        na, nb, m = self.f_tilde.shape
        return ProblemSpec(
            geometry=self.geometry,
            controls=self.controls,
            coefficients=CoefficientField(
                a=np.ones((na, nb, m)),
                b=self.b_tilde,
                c=self.c_tilde,
                f=self.f_tilde,
            ),
        )

    def freeze_zeroth_order(self, u: GridFunction, lam: float) -> "ReducedProblem":
        """Absorb (c~ - lam) u + f~ into a frozen zero-order table g."""
        w = u.independent
        g = (self.c_tilde - lam) * w[None, None, :] + self.f_tilde
        return replace(self, frozen_g=g)

    def frozen_g_sup(self) -> float | None:
        """Measured sup bound of the frozen zero-order table (no closed form exists)."""
        if self.frozen_g is None:
            return None
        return float(np.abs(self.frozen_g).max())


def _axis_diffs(geometry: DomainGeometry, table: np.ndarray):
    """Neighbour differences of a (..., node) table along each axis."""
    lead = table.shape[:-1]
    grid = table.reshape(lead + geometry.grid_shape())
    nd = geometry.dimension
    for ax in range(nd):
        gax = len(lead) + ax
        if geometry.periodic:
            yield np.roll(grid, -1, axis=gax) - grid
        else:
            yield np.diff(grid, axis=gax)


def _lipschitz_seminorm(geometry: DomainGeometry, table: np.ndarray, vector=False) -> np.ndarray:
    """Max neighbour slope per (alpha, beta); vector tables use the Euclidean norm."""
    h = geometry.spacing
    if vector:
        comps = [table[..., d] for d in range(table.shape[-1])]
        worst = np.zeros(table.shape[:2])
        for ax in range(geometry.dimension):
            sq = None
            for comp in comps:
                d = list(_axis_diffs(geometry, comp))[ax]
                sq = d * d if sq is None else sq + d * d
            mags = np.sqrt(sq).reshape(table.shape[0], table.shape[1], -1)
            if mags.shape[2]:
                worst = np.maximum(worst, mags.max(axis=2) / h)
        return worst
    worst = np.zeros(table.shape[:2])
    for d in _axis_diffs(geometry, table):
        flat = np.abs(d).reshape(table.shape[0], table.shape[1], -1)
        if flat.shape[2]:
            worst = np.maximum(worst, flat.max(axis=2) / h)
    return worst


def _sup_norm(table: np.ndarray, vector=False) -> np.ndarray:
    if vector:
        return np.sqrt((table * table).sum(axis=-1)).max(axis=2)
    return np.abs(table).max(axis=2)


def validate_assumptions(spec: ProblemSpec, require_positive_diffusion: bool = True) -> AssumptionReport:
    """Measure the structural bounds of the coefficient tables and decide pass/fail.

    K is the worst coefficient family's (sup norm + discrete Lipschitz
    seminorm); lambda and lambda_1 are the table minima of c and a; M the sup
    of |f|; K1 the Lipschitz seminorm of the drift; the threshold is
    lambda_0 = 2*K1.  A_eff and B_eff are the reduced-table constants, with
    the drift-slope proxy L_ref = M/lambda recorded alongside.
    """
    geo = spec.geometry
    co = spec.coefficients
    sups = {
        "a": _sup_norm(co.a),
        "b": _sup_norm(co.b, vector=True),
        "c": _sup_norm(co.c),
        "f": _sup_norm(co.f),
    }
    lips = {
        "a": _lipschitz_seminorm(geo, co.a),
        "b": _lipschitz_seminorm(geo, co.b, vector=True),
        "c": _lipschitz_seminorm(geo, co.c),
        "f": _lipschitz_seminorm(geo, co.f),
    }
    K = max(float((sups[n] + lips[n]).max()) for n in COEFF_NAMES)
    lam = float(co.c.min())
    lambda1 = float(co.a.min())
    M = float(np.abs(co.f).max())
    K1 = float(lips["b"].max())
    lambda0 = 2.0 * K1

    reasons = []
    if lam <= 0:
        reasons.append("A3 violated: c must stay above a positive lambda")
    if require_positive_diffusion and lambda1 <= 0:
        reasons.append("A4 violated: a must stay above a positive lambda_1")
    if lam > 0 and lam <= lambda0:
        reasons.append(f"lambda = {lam:g} is not above the threshold lambda_0 = {lambda0:g}")

    L_ref = M / lam if lam > 0 else 0.0
    if lambda1 > 0:
        reduced = reduce_by_diffusion(spec)
        A_eff, B_eff = effective_constants(reduced, L_ref)
    else:
        A_eff, B_eff = float("nan"), float("nan")

    return AssumptionReport(
        K=K,
        lambda_=lam,
        lambda1=lambda1,
        K1=K1,
        lambda0=lambda0,
        M=M,
        A_eff=A_eff,
        B_eff=B_eff,
        L_ref=L_ref,
        passed=not reasons,
        reasons=tuple(reasons),
    )


def reduce_by_diffusion(spec: ProblemSpec) -> ReducedProblem:
    """Divide the tables by a pointwise, normalizing the nonlocal coefficient to 1."""
    co = spec.coefficients
    if float(co.a.min()) <= 0:
        raise AssumptionError(
            "A4 violated: cannot normalize by a non-positive diffusion coefficient",
            reasons=("A4 violated",),
        )
    return ReducedProblem(
        geometry=spec.geometry,
        controls=spec.controls,
        f_tilde=co.f / co.a,
        c_tilde=co.c / co.a,
        b_tilde=co.b / co.a[..., None],
    )


def effective_constants(reduced: ReducedProblem, L: float, scale: float = 1.0) -> tuple:
    """Uniform constants bounding the linearized drift and source terms.

    A_eff bounds the gradient coefficient (sup of |b~|).  B_eff bounds the
    x-derivative of the frozen Hamiltonian when the solution has Lipschitz
    constant L: the zero-order table contributes its own seminorm plus the
    c~ seminorm times L*scale, and the drift seminorm couples to L.  Both
    are aggregated as the worst case over controls.
    """
    if L < 0 or not np.isfinite(L):
        raise SpecError("L must be a finite nonnegative Lipschitz bound")
    geo = reduced.geometry
    A_eff = float(_sup_norm(reduced.b_tilde, vector=True).max())
    lc = _lipschitz_seminorm(geo, reduced.c_tilde)
    lf = _lipschitz_seminorm(geo, reduced.f_tilde)
    lb = _lipschitz_seminorm(geo, reduced.b_tilde, vector=True)
    B_eff = float((lc * L * scale + lf + lb * L).max())
    return A_eff, B_eff


def bracket_bounds(report: AssumptionReport) -> tuple:
    """Constant barriers -M/lambda and +M/lambda bracketing every solution."""
    if report.lambda_ <= 0:
        raise AssumptionError("A3 violated: bracket needs lambda > 0", reasons=("A3 violated",))
    hi = report.M / report.lambda_
    return (-hi, hi)


# ---------------------------------------------------------------------------
# Problem spec files (JSON)
# ---------------------------------------------------------------------------


def _eval_descriptor(desc, geometry: DomainGeometry, component_of=None) -> np.ndarray:
    """Closed-form coefficient descriptor -> values on the independent nodes."""
    x = geometry.coords()
    if not isinstance(desc, dict) or "kind" not in desc:
        raise SpecError(f"bad coefficient descriptor: {desc!r}")
    kind = desc["kind"]
    if kind == "const":
        return np.full(geometry.n_independent, float(desc["value"]))
    if kind == "sin":
        axis = int(desc.get("axis", 0))
        amp = float(desc.get("amplitude", 1.0))
        freq = float(desc.get("frequency", 1.0))
        phase = float(desc.get("phase", 0.0))
        off = float(desc.get("offset", 0.0))
        return off + amp * np.sin(freq * x[:, axis] + phase)
    if kind == "affine":
        slope = np.atleast_1d(np.asarray(desc.get("slope", 0.0), dtype=float))
        if slope.size == 1 and geometry.dimension > 1:
            slope = np.repeat(slope, geometry.dimension)
        if slope.size != geometry.dimension:
            raise SpecError("affine slope needs one entry per axis")
        return float(desc.get("intercept", 0.0)) + x @ slope
    raise SpecError(f"unknown coefficient descriptor kind {kind!r}")


def _coefficient_from_payload(payload, geometry, controls, vector=False) -> np.ndarray:
    na, nb = controls.shape
    m = geometry.n_independent
    dim = geometry.dimension

    def tile(one_control):
        return np.broadcast_to(one_control, (na, nb) + one_control.shape).copy()

    if isinstance(payload, (int, float)):
        payload = {"kind": "const", "value": float(payload)}
    if isinstance(payload, dict) and "kind" in payload:
        if vector and payload["kind"] == "const" and isinstance(payload.get("value"), (list, tuple)):
            comp = np.asarray(payload["value"], dtype=float)
            if comp.size != dim:
                raise SpecError("const drift value needs one entry per axis")
            return tile(np.broadcast_to(comp, (m, dim)).copy())
        vals = _eval_descriptor(payload, geometry)
        if vector:
            if dim != 1:
                raise SpecError("vector coefficient needs per-component descriptors in 2D")
            vals = vals[:, None]
        return tile(vals)
    if vector and isinstance(payload, (list, tuple)) and payload and isinstance(payload[0], dict):
        comps = [_eval_descriptor(d, geometry) for d in payload]
        if len(comps) != dim:
            raise SpecError("drift needs one descriptor per axis")
        return tile(np.stack(comps, axis=-1))
    if isinstance(payload, dict) and "values" in payload:
        payload = payload["values"]
    arr = np.asarray(payload, dtype=float)
    if arr.ndim == (4 if vector else 3) or (vector and arr.ndim == 3 and dim == 1):
        if vector and arr.ndim == 3:
            arr = arr[..., None]
        if arr.shape[0] != na or arr.shape[1] != nb:
            raise SpecError(
                f"incomplete coefficient table: control shape {arr.shape[:2]}, expected {(na, nb)}"
            )
        return arr
    raise SpecError(f"cannot interpret coefficient payload of shape {np.shape(payload)}")


def spec_from_dict(data: dict) -> ProblemSpec:
    """Build a ProblemSpec from the problem-spec file schema."""
    try:
        geometry = DomainGeometry(
            dimension=int(data["dimension"]),
            half_width=float(data["half_width"]),
            points=int(data["points"]),
            extension=str(data["extension"]),
            tail_value=float(data.get("tail_value", 0.0)),
        )
        controls = ControlGrid(tuple(data["alphas"]), tuple(data["betas"]))
        coeffs = data["coefficients"]
        tables = {
            name: _coefficient_from_payload(coeffs[name], geometry, controls, vector=(name == "b"))
            for name in COEFF_NAMES
        }
    except KeyError as exc:
        raise SpecError(f"problem spec missing field {exc.args[0]!r}") from exc
    return ProblemSpec.from_tables(geometry, controls, **tables)


def spec_from_json(path) -> ProblemSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return spec_from_dict(json.load(fh))
