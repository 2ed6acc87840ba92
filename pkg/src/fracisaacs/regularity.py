"""Regularity diagnostics: difference quotients, the parabolic lift,
the shrinking-cylinder oscillation cascade, Hölder fits, and the
closed-form Lipschitz certificate with its brute-force two-point oracle.

The pipeline mirrors how smoothness is extracted from the equation:

1. Difference quotients v = (u(. + h l) - u) / h of a solution satisfy the
   two-sided inequalities  -A|grad v| - B + lambda v + (-lap)^{1/2} v <= 0
   and its mirror, with A, B independent of h and l; `dq_residuals`
   measures the worst violation of each side on a grid function.
2. Multiplying by e^{lambda t} turns those into parabolic inequalities on
   t <= 0 (`time_lift`).
3. Over cylinders Q_s = [-s, 0] x B_s shrinking at ratio r = 1/(4 + 4A),
   the oscillation of the lifted field should decay like 2 r^{sigma k};
   `oscillation_cascade` tabulates the measured decay, bisects for the
   largest passing sigma, and `holder_fit` turns (radius, oscillation)
   pairs into an exponent by log-log regression.
4. The two-point penalized maximization of u(x) - u(y) - gamma/2 |x-y|^2
   - eps/2 (|x|^2 + |y|^2) yields the Lipschitz bound
   K~ = sqrt(2 (K^2 / (2 lambda (lambda - 2 K1)) + C / lambda)), valid for
   lambda > 2 K1; `doubling_max` is the brute-force oracle for that
   argument and `measured_nonlocal_constant` backs out the constant C the
   penalization argument needs from grid data.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    FitError,
    GeometryError,
    GridAlignmentError,
    SizeCapError,
    SpecError,
    ThresholdError,
)
from .fraclap import KernelQuadrature, build_quadrature
from .grids import DomainGeometry, GridFunction, require_same_geometry

DOUBLING_NODE_CAP = 5000


# ---------------------------------------------------------------------------
# Difference quotients and their two-sided inequalities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiffQuotient:
    h: float
    ell: np.ndarray
    values: GridFunction


def diff_quotient(u: GridFunction, h: float, ell) -> DiffQuotient:
    """(u(x + h*ell) - u(x)) / h with the shift resolved by the extension model."""
    geo = u.geometry
    ell = np.atleast_1d(np.asarray(ell, dtype=float))
    if ell.size != geo.dimension:
        raise GeometryError("direction must have one component per axis")
    norm = float(np.linalg.norm(ell))
    if abs(norm - 1.0) > 1e-9:
        raise SpecError("direction must be a unit vector")
    if not (h > 0):
        raise SpecError("step h must be positive")
    cells = h * ell / geo.spacing
    cells_round = np.round(cells)
    if np.max(np.abs(cells - cells_round)) > 1e-8:
        raise GridAlignmentError(
            f"step h*ell = {h * ell} is not an integer number of grid cells"
        )
    shifted = geo.shift(u.independent, cells_round.astype(int))
    vals = (shifted - u.independent) / h
    return DiffQuotient(h=float(h), ell=ell, values=GridFunction.from_independent(geo, vals))


def gradient_magnitude(v: GridFunction) -> np.ndarray:
    """|grad v| via central differences on the independent nodes."""
    geo = v.geometry
    w = v.independent
    h = geo.spacing
    sq = np.zeros_like(w)
    for ax in range(geo.dimension):
        cells = [0] * geo.dimension
        cells[ax] = 1
        fwd = geo.shift(w, cells)
        cells[ax] = -1
        bwd = geo.shift(w, cells)
        g = (fwd - bwd) / (2.0 * h)
        sq += g * g
    return np.sqrt(sq)


def dq_residual_fields(
    v: GridFunction,
    A: float,
    B: float,
    lam: float,
    quad: KernelQuadrature | None = None,
) -> tuple:
    """Pointwise values of the sub- and super-inequality expressions.

    sub  = -A|grad v| - B + lam v + (-lap)^{1/2} v   (should be <= 0)
    super=  A|grad v| + B + lam v + (-lap)^{1/2} v   (should be >= 0)
    """
    if A < 0 or B < 0 or lam <= 0:
        raise SpecError("need A, B >= 0 and lambda > 0")
    if quad is None:
        quad = build_quadrature(v.geometry)
    else:
        require_same_geometry(quad.geometry, v.geometry)
    lv = quad.apply(v.independent)
    gmag = gradient_magnitude(v)
    w = v.independent
    sub = -A * gmag - B + lam * w + lv
    sup = A * gmag + B + lam * w + lv
    return sub, sup


def dq_residuals(v: GridFunction, A: float, B: float, lam: float, quad=None) -> tuple:
    """Worst positive excess of the sub-inequality, worst deficit of the super one."""
    sub, sup = dq_residual_fields(v, A, B, lam, quad=quad)
    return (float(max(0.0, np.max(sub))), float(max(0.0, -np.min(sup))))


# ---------------------------------------------------------------------------
# Time lift and the oscillation cascade
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpaceTimeField:
    """Values over a time grid in [-T, 0] crossed with the spatial grid."""

    times: np.ndarray
    geometry: DomainGeometry
    values: np.ndarray = field(repr=False)  # (n_times, n_nodes)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or np.any(np.diff(t) <= 0):
            raise SpecError("times must be strictly increasing")
        if np.any(t > 1e-12):
            raise SpecError("times must lie in [-T, 0]")
        if v.shape != (t.size, self.geometry.n_nodes):
            raise GeometryError("space-time values must be (n_times, n_nodes)")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)


def time_lift(u: GridFunction, lam: float, t_grid) -> SpaceTimeField:
    """v(t, x) = e^{lam t} u(x); the t = 0 slice reproduces u exactly."""
    if lam < 0:
        raise SpecError("lambda must be nonnegative")
    t = np.asarray(list(t_grid), dtype=float)
    vals = np.exp(lam * t)[:, None] * u.values[None, :]
    return SpaceTimeField(times=t, geometry=u.geometry, values=vals)


@dataclass(frozen=True)
class CascadeRow:
    k: int
    radius: float
    oscillation: float
    envelope: float
    passed: bool
    resolved: bool

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "radius": self.radius,
            "oscillation": self.oscillation,
            "envelope": self.envelope,
            "passed": self.passed,
            "resolved": self.resolved,
        }


@dataclass(frozen=True)
class CascadeTable:
    r: float
    sigma: float
    rows: tuple
    theta_fit: float
    sigma_star: float
    slack: float
    measure_fraction: float | None

    def resolved_rows(self):
        return [row for row in self.rows if row.resolved]

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "sigma": self.sigma,
            "sigma_star": self.sigma_star,
            "theta_fit": self.theta_fit,
            "slack": self.slack,
            "measure_fraction": self.measure_fraction,
            "rows": [row.to_dict() for row in self.rows],
        }


def _cylinder_oscillations(field: SpaceTimeField, radii, min_spatial=3, min_times=2):
    coords = field.geometry.coords_full()
    dist = np.linalg.norm(coords, axis=1)
    t = field.times
    oscs, resolved = [], []
    for rad in radii:
        smask = dist <= rad + 1e-12
        tmask = t >= -rad - 1e-12
        if smask.sum() < min_spatial or tmask.sum() < min_times:
            oscs.append(0.0)
            resolved.append(False)
            continue
        block = field.values[np.ix_(tmask, smask)]
        oscs.append(float(block.max() - block.min()))
        resolved.append(True)
    return np.asarray(oscs), resolved


def _rows_pass(oscs, resolved, r, sigma, slack):
    for k, (osc, ok) in enumerate(zip(oscs, resolved)):
        if ok and osc > 2.0 * r ** (sigma * k) * (1.0 + slack):
            return False
    return True


def oscillation_cascade(
    v: SpaceTimeField,
    A: float,
    sigma: float,
    k_max: int,
    slack: float = 0.1,
    min_spatial: int = 3,
    min_times: int = 2,
) -> CascadeTable:
    """Measure oscillations over nested cylinders Q_{r^k}, r = 1/(4+4A).

    Rows compare against the envelope 2 r^{sigma k} (with relative slack);
    cylinders too small for the grid are marked unresolved and skipped.
    sigma_star is the largest exponent in (0, 1) for which every resolved
    row passes, found by bisection; theta_fit is one minus the geometric
    mean of successive oscillation ratios.
    """
    if A < 0:
        raise SpecError("A must be nonnegative")
    if not (0 < sigma < 1):
        raise SpecError("sigma must lie in (0, 1)")
    if k_max < 0:
        raise SpecError("k_max must be nonnegative")
    r = 1.0 / (4.0 + 4.0 * A)
    radii = [r**k for k in range(k_max + 1)]
    oscs, resolved = _cylinder_oscillations(v, radii, min_spatial, min_times)

    rows = tuple(
        CascadeRow(
            k=k,
            radius=radii[k],
            oscillation=oscs[k],
            envelope=2.0 * r ** (sigma * k),
            passed=bool(resolved[k] and oscs[k] <= 2.0 * r ** (sigma * k) * (1.0 + slack)),
            resolved=resolved[k],
        )
        for k in range(k_max + 1)
    )

    # Largest passing exponent via bisection (pass set is monotone in sigma).
    if _rows_pass(oscs, resolved, r, 1.0 - 1e-9, slack):
        sigma_star = 1.0
    elif not _rows_pass(oscs, resolved, r, 1e-9, slack):
        sigma_star = 0.0
    else:
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if _rows_pass(oscs, resolved, r, mid, slack):
                lo = mid
            else:
                hi = mid
        sigma_star = lo

    usable = [o for o, okk in zip(oscs, resolved) if okk and o > 0]
    if len(usable) >= 2:
        ratios = [usable[i + 1] / usable[i] for i in range(len(usable) - 1)]
        theta_fit = 1.0 - float(np.exp(np.mean(np.log(ratios))))
    else:
        theta_fit = float("nan")

    measure_fraction = None
    if v.times.min() <= -1.0 + 1e-12:
        coords = v.geometry.coords_full()
        smask = np.linalg.norm(coords, axis=1) <= 1.0 + 1e-12
        tmask = (v.times >= -2.0 - 1e-12) & (v.times <= -1.0 + 1e-12)
        if smask.any() and tmask.any():
            block = v.values[np.ix_(tmask, smask)]
            measure_fraction = float(np.mean(block <= 0.0))

    return CascadeTable(
        r=r,
        sigma=float(sigma),
        rows=rows,
        theta_fit=theta_fit,
        sigma_star=float(sigma_star),
        slack=float(slack),
        measure_fraction=measure_fraction,
    )


@dataclass(frozen=True)
class HolderFit:
    sigma: float
    constant: float
    residual: float

    def to_dict(self) -> dict:
        return {"sigma": self.sigma, "constant": self.constant, "residual": self.residual}


def holder_fit(radii, oscillations) -> HolderFit:
    """Least-squares exponent: slope of log(osc) against log(radius)."""
    rad = np.asarray(list(radii), dtype=float)
    osc = np.asarray(list(oscillations), dtype=float)
    mask = (rad > 0) & (osc > 0)
    if mask.sum() < 3:
        raise FitError(f"need at least 3 rows with positive oscillation, got {int(mask.sum())}")
    lx, ly = np.log(rad[mask]), np.log(osc[mask])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return HolderFit(
        sigma=float(slope),
        constant=float(np.exp(intercept)),
        residual=float(np.sqrt(np.mean(resid**2))),
    )


# ---------------------------------------------------------------------------
# Lipschitz certificate and the doubling oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LipschitzCertificate:
    K: float
    K1: float
    C: float
    lambda_: float
    gamma_star: float
    K_tilde: float

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "K1": self.K1,
            "C": self.C,
            "lambda": self.lambda_,
            "gamma_star": self.gamma_star,
            "K_tilde": self.K_tilde,
        }


def lipschitz_certificate(K: float, K1: float, C: float, lam: float) -> LipschitzCertificate:
    """Closed-form Lipschitz bound from the two-point penalization argument.

    Minimizing  K^2/(2 gamma lam (lam - 2 K1)) + C/(lam gamma) + gamma d^2/2
    over gamma > 0 gives K~ * d with K~ = sqrt(2 (K^2/(2 lam (lam - 2 K1))
    + C/lam)); gamma_star is the minimizer at unit separation d = 1.
    """
    if K < 0 or C < 0 or K1 < 0:
        raise SpecError("K, K1, C must be nonnegative")
    if lam <= 2.0 * K1:
        raise ThresholdError(
            f"below threshold lambda_0 = {2.0 * K1:g}: certificate unavailable "
            f"(lambda = {lam:g})"
        )
    inner = K * K / (2.0 * lam * (lam - 2.0 * K1)) + C / lam
    k_tilde = float(np.sqrt(2.0 * inner))
    return LipschitzCertificate(
        K=float(K), K1=float(K1), C=float(C), lambda_=float(lam),
        gamma_star=k_tilde, K_tilde=k_tilde,
    )


@dataclass(frozen=True)
class DoublingResult:
    x0: np.ndarray
    y0: np.ndarray
    m_eps: float


def _pair_tables(u: GridFunction):
    geo = u.geometry
    if geo.n_independent > DOUBLING_NODE_CAP:
        raise SizeCapError(
            f"doubling search is O(N^2); refusing {geo.n_independent} nodes "
            f"(cap {DOUBLING_NODE_CAP})"
        )
    w = u.independent
    pts = geo.coords()
    diff = w[:, None] - w[None, :]
    dist2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1)
    norm2 = (pts**2).sum(axis=1)
    return w, pts, diff, dist2, norm2


def doubling_max(
    u: GridFunction, gamma: float, epsilon: float, threads: int = 1
) -> DoublingResult:
    """Brute-force maximizer of u(x) - u(y) - gamma/2 |x-y|^2 - eps/2 (|x|^2+|y|^2).

    The maximum M_eps is nonnegative whenever the origin is a grid node
    (the pair (0, 0) scores zero) and grows as eps decreases.
    """
    if gamma <= 0 or epsilon < 0:
        raise SpecError("need gamma > 0 and epsilon >= 0")
    w, pts, diff, dist2, norm2 = _pair_tables(u)
    pen = epsilon / 2.0 * (norm2[:, None] + norm2[None, :])

    def block_best(rows):
        psi = diff[rows] - gamma / 2.0 * dist2[rows] - pen[rows]
        flat = int(np.argmax(psi))
        i_local, j = divmod(flat, psi.shape[1])
        return float(psi[i_local, j]), rows.start + i_local, j

    n = w.size
    if threads > 1 and n > 256:
        chunks = [range(s, min(s + 256, n)) for s in range(0, n, 256)]
        slices = [slice(c.start, c.stop) for c in chunks]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(block_best, slices))
    else:
        results = [block_best(slice(0, n))]
    best = max(results, key=lambda t: (t[0], -(t[1] * n + t[2])))
    _, i, j = best
    return DoublingResult(x0=pts[i].copy(), y0=pts[j].copy(), m_eps=best[0])


def two_point_max(u: GridFunction, gammas) -> np.ndarray:
    """sup over grid pairs of u(x) - u(y) - gamma/2 |x-y|^2, per gamma (eps = 0)."""
    _, _, diff, dist2, _ = _pair_tables(u)
    out = []
    for g in gammas:
        if g <= 0:
            raise SpecError("gammas must be positive")
        out.append(float(np.max(diff - g / 2.0 * dist2)))
    return np.asarray(out)


def measured_nonlocal_constant(u: GridFunction, K: float, K1: float, lam: float, gammas) -> float:
    """Smallest C making lam * M(gamma) <= K^2/(2 gamma (lam-2K1)) + C/gamma
    hold at every sampled gamma, where M(gamma) is the two-point maximum."""
    if lam <= 2.0 * K1:
        raise ThresholdError("below threshold lambda_0: constant is not defined")
    gam = np.asarray(list(gammas), dtype=float)
    m_vals = two_point_max(u, gam)
    c_needed = gam * lam * m_vals - K * K / (2.0 * (lam - 2.0 * K1))
    return float(max(0.0, np.max(c_needed)))
