"""Half-Laplacian of grid functions by singular-integral quadrature.

The operator is split at a cutoff radius kappa (default: one grid spacing).

* Near field, |z| < kappa: the principal value kills the odd first-order
  part, and the second-order Taylor term integrates in closed form to
  -c_norm * omega_n * kappa / (2n) * Laplacian(u)(x), evaluated with the
  standard central second difference.  In 1D this is -c_norm * u'' * kappa.
* Far field, kappa <= |z| <= tail_radius: midpoint quadrature on the grid
  offsets z = j*h, with cells clipped radially so the near/far pieces tile
  [kappa, tail_radius] exactly.  Periodic grids fold the full image sum
  (all offsets z = j*h + m*period with |z| <= tail_radius) into one weight
  per in-window offset.
* Tail, |z| > tail_radius: integrated in closed form against the declared
  extension.  The kernel integral over |z| > R is omega_n / R; the far
  value of the extension is tail_value for constant tails and the grid
  mean for periodic extensions.

The normalization c_norm = c(n, 1/2) is fixed so the Fourier symbol of the
operator is |xi|: c(1, 1/2) = 1/pi and c(2, 1/2) = 1/(2*pi).  All quadrature
weights are strictly positive, so the discrete operator is monotone: at a
global grid maximum the operator value is nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, SizeCapError, SpecError
from .grids import DomainGeometry, GridFunction

# Desk-scale guards for dense operator assembly.
MAX_DENSE_NODES_1D = 4700
MAX_AXIS_NODES_2D = 66

# Default truncation radii, in units of the period / window width.  The
# folded image sum makes large radii cheap; 400 periods puts the 1D
# truncation floor near 3e-11, below the discretization error of every
# grid the dense assembly allows.
PERIODIC_TAIL_PERIODS = {1: 400.0, 2: 16.0}
CONSTANT_TAIL_WINDOWS = {1: 4.0, 2: 2.0}


def normalization_constant(n: int) -> float:
    """Kernel constant c(n, 1/2) making the operator's Fourier symbol |xi|."""
    if n == 1:
        return 1.0 / np.pi
    if n == 2:
        return 1.0 / (2.0 * np.pi)
    raise SpecError(f"unsupported dimension {n}; only 1 and 2 are implemented")


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1} (2 in 1D, 2*pi in 2D)."""
    return 2.0 if n == 1 else 2.0 * np.pi


def default_tail_radius(geometry: DomainGeometry) -> float:
    if geometry.periodic:
        return PERIODIC_TAIL_PERIODS[geometry.dimension] * geometry.period
    return CONSTANT_TAIL_WINDOWS[geometry.dimension] * geometry.period


def _check_size(geometry: DomainGeometry):
    if geometry.dimension == 1 and geometry.n_independent > MAX_DENSE_NODES_1D:
        raise SizeCapError(
            f"dense 1D operator capped at {MAX_DENSE_NODES_1D} nodes, "
            f"got {geometry.n_independent}"
        )
    if geometry.dimension == 2 and geometry.axis_points > MAX_AXIS_NODES_2D:
        raise SizeCapError(
            f"dense 2D operator capped at {MAX_AXIS_NODES_2D} nodes per axis, "
            f"got {geometry.axis_points}"
        )


def _clipped_weights(z_abs: np.ndarray, h: float, cell: float, kappa: float, radius: float):
    """Radially clipped midpoint cell widths for offsets |z| against [kappa, radius].

    `cell` is the full cell measure (h in 1D, h^2 in 2D); the clip is linear
    in the radial coordinate, exact in 1D and O(h^2)-accurate in 2D.
    """
    lo = np.maximum(z_abs - h / 2.0, kappa)
    hi = np.minimum(z_abs + h / 2.0, radius)
    frac = np.clip((hi - lo) / h, 0.0, 1.0)
    return cell * frac


@dataclass
class KernelQuadrature:
    """Assembled discrete half-Laplacian for one geometry.

    Exposes the affine form  L u = matrix @ u + affine  acting on the
    independent nodes, together with the split pieces used by the near/far
    evaluation API and the row sums needed by CFL conditions.
    """

    geometry: DomainGeometry
    kappa: float
    tail_radius: float
    c_norm: float
    matrix: np.ndarray = field(repr=False)
    affine: np.ndarray = field(repr=False)
    row_weight_sum: np.ndarray = field(repr=False)
    far_kernel: np.ndarray = field(repr=False)
    far_out_window: np.ndarray = field(repr=False)
    tail_coefficient: float

    @property
    def s_h(self) -> float:
        """h * (max row weight sum) / c_norm; enters the solver's CFL rule."""
        return self.geometry.spacing * float(np.max(self.row_weight_sum)) / self.c_norm

    def apply(self, ind_values: np.ndarray) -> np.ndarray:
        w = np.asarray(ind_values, dtype=float).reshape(-1)
        if w.size != self.geometry.n_independent:
            raise GeometryError("value array does not match the quadrature geometry")
        return self.matrix @ w + self.affine

    def near(self, ind_values: np.ndarray) -> np.ndarray:
        return _near_field(self.geometry, ind_values, self.kappa, self.c_norm)

    def far(self, ind_values: np.ndarray) -> np.ndarray:
        return self.apply(ind_values) - self.near(ind_values)


def _near_field(geometry: DomainGeometry, ind_values, kappa: float, c_norm: float) -> np.ndarray:
    """-c_norm * omega_n * kappa/(2n) * discrete Laplacian, via extension-aware shifts."""
    n = geometry.dimension
    h = geometry.spacing
    w = np.asarray(ind_values, dtype=float).reshape(-1)
    coef = c_norm * sphere_area(n) * kappa / (2.0 * n) / (h * h)
    acc = np.zeros_like(w)
    for ax in range(n):
        cells = [0] * n
        cells[ax] = 1
        acc += geometry.shift(w, cells)
        cells[ax] = -1
        acc += geometry.shift(w, cells)
    return coef * (2.0 * n * w - acc)


def _far_kernel_1d(geometry: DomainGeometry, kappa: float, radius: float, c_norm: float):
    """Per-offset far weights.

    Periodic: k[q] for q = 1..m-1 sums all images q*h + j*period inside
    [kappa, radius].  Constant tail: k0[q] for offsets q*h up to the window
    width, plus the lattice total over [kappa, radius] used to price
    out-of-window offsets per row.
    """
    h = geometry.spacing
    m = geometry.axis_points
    if geometry.periodic:
        period = geometry.period
        q = np.arange(1, m, dtype=float) * h
        n_img = int(np.ceil((radius + period) / period))
        k = np.zeros(m)
        for j in range(-n_img, n_img + 1):
            z = q + j * period
            za = np.abs(z)
            wts = _clipped_weights(za, h, h, kappa, radius)
            mask = wts > 0
            k[1:][mask] += c_norm * wts[mask] / za[mask] ** 2
        return k, 0.0
    q_max = int(np.floor(radius / h + 0.5)) + 1
    q = np.arange(1, q_max + 1, dtype=float) * h
    wts = _clipped_weights(q, h, h, kappa, radius)
    kern = np.zeros(q_max + 1)
    kern[1:] = c_norm * wts / q**2
    lattice_total = 2.0 * float(np.sum(kern))
    k0 = kern[:m]
    if k0.size < m:
        k0 = np.concatenate([k0, np.zeros(m - k0.size)])
    return k0, lattice_total


def _far_kernel_2d(geometry: DomainGeometry, kappa: float, radius: float, c_norm: float):
    h = geometry.spacing
    m = geometry.axis_points
    cell = h * h
    if geometry.periodic:
        period = geometry.period
        qx = np.arange(m, dtype=float) * h
        gx, gy = np.meshgrid(qx, qx, indexing="ij")
        n_img = int(np.ceil((radius + period) / period))
        k = np.zeros((m, m))
        for jx in range(-n_img, n_img + 1):
            zx = gx + jx * period
            for jy in range(-n_img, n_img + 1):
                zy = gy + jy * period
                za = np.hypot(zx, zy)
                wts = _clipped_weights(za, h, cell, kappa, radius)
                if jx == 0 and jy == 0:
                    wts[0, 0] = 0.0  # self offset carries no pair difference
                mask = wts > 0
                k[mask] += c_norm * wts[mask] / za[mask] ** 3
        return k, 0.0
    q_max = int(np.floor(radius / h + 0.5)) + 1
    ax = np.arange(-q_max, q_max + 1, dtype=float) * h
    gx, gy = np.meshgrid(ax, ax, indexing="ij")
    za = np.hypot(gx, gy)
    za[q_max, q_max] = 1.0  # dummy; the center offset carries zero weight
    wts = _clipped_weights(za, h, cell, kappa, radius)
    wts[q_max, q_max] = 0.0
    kern = np.zeros_like(za)
    mask = wts > 0
    kern[mask] = c_norm * wts[mask] / za[mask] ** 3
    lattice_total = float(np.sum(kern))
    # In-window offsets are |qx|, |qy| < m; fold the four sign quadrants.
    k0 = kern[q_max : q_max + m, q_max : q_max + m].copy()
    if k0.shape[0] < m:
        pad = m - k0.shape[0]
        k0 = np.pad(k0, ((0, pad), (0, pad)))
    return k0, lattice_total


def build_quadrature(
    geometry: DomainGeometry,
    kappa: float | None = None,
    tail_radius: float | None = None,
) -> KernelQuadrature:
    """Assemble the dense discrete operator for a geometry."""
    _check_size(geometry)
    h = geometry.spacing
    n = geometry.dimension
    c_norm = normalization_constant(n)
    kappa = h if kappa is None else float(kappa)
    tail_radius = default_tail_radius(geometry) if tail_radius is None else float(tail_radius)
    if not (0 < kappa < tail_radius):
        raise SpecError(f"need 0 < kappa < tail_radius, got kappa={kappa}, R={tail_radius}")

    m_tot = geometry.n_independent
    tail_coef = c_norm * sphere_area(n) / tail_radius
    near_w = c_norm * sphere_area(n) * kappa / (2.0 * n) / (h * h)

    if n == 1:
        k, lattice_total = _far_kernel_1d(geometry, kappa, tail_radius, c_norm)
    else:
        k, lattice_total = _far_kernel_2d(geometry, kappa, tail_radius, c_norm)

    m = geometry.axis_points
    if geometry.periodic:
        if n == 1:
            idx = (np.arange(m)[None, :] - np.arange(m)[:, None]) % m
            far = -k[idx]
        else:
            dx = (np.arange(m)[None, :] - np.arange(m)[:, None]) % m
            kflat = k.reshape(-1)
            idx = (dx[:, None, :, None] * m + dx[None, :, None, :]).reshape(m_tot, m_tot)
            far = -kflat[idx]
        np.fill_diagonal(far, 0.0)
        row_far = -far.sum(axis=1)
        A = far
        A[np.arange(m_tot), np.arange(m_tot)] = row_far
        # Near field: pair weights on axis neighbours, wrapped.
        for ax_i in range(n):
            for sgn in (1, -1):
                cells = [0] * n
                cells[ax_i] = sgn
                nb = _neighbor_indices_periodic(geometry, cells)
                A[np.arange(m_tot), nb] -= near_w
                A[np.arange(m_tot), np.arange(m_tot)] += near_w
        # Tail against the periodic mean: tail_coef * (u - mean(u)).
        A -= tail_coef / m_tot
        A[np.arange(m_tot), np.arange(m_tot)] += tail_coef
        affine = np.zeros(m_tot)
        row_sum = row_far + 2.0 * n * near_w + tail_coef
        far_out = np.zeros(m_tot)
    else:
        if n == 1:
            qd = np.abs(np.arange(m)[None, :] - np.arange(m)[:, None])
            far = -k[qd]
        else:
            dxa = np.abs(np.arange(m)[None, :] - np.arange(m)[:, None])
            idx = (dxa[:, None, :, None] * m + dxa[None, :, None, :]).reshape(m_tot, m_tot)
            far = -k.reshape(-1)[idx]
        np.fill_diagonal(far, 0.0)
        row_far_in = -far.sum(axis=1)
        # Out-of-window far offsets inside the truncation radius read the
        # constant tail; beyond the radius the kernel integrates to
        # omega_n / tail_radius in closed form.
        far_out = np.maximum(lattice_total - row_far_in, 0.0)
        tcoef = far_out + tail_coef
        A = far
        A[np.arange(m_tot), np.arange(m_tot)] = row_far_in + tcoef
        affine = -tcoef * geometry.tail_value
        row_sum = row_far_in + tcoef
        # Near field on axis neighbours; window edges couple to the tail value.
        grid_idx = np.arange(m_tot).reshape(geometry.grid_shape())
        for ax_i in range(n):
            for sgn in (1, -1):
                inside, nb = _neighbor_indices_tail(geometry, grid_idx, ax_i, sgn)
                A[inside, nb] -= near_w
                A[inside, inside] += near_w
                outside = np.setdiff1d(np.arange(m_tot), inside, assume_unique=False)
                A[outside, outside] += near_w
                affine[outside] -= near_w * geometry.tail_value
        row_sum = A.diagonal().copy()

    return KernelQuadrature(
        geometry=geometry,
        kappa=kappa,
        tail_radius=tail_radius,
        c_norm=c_norm,
        matrix=A,
        affine=affine,
        row_weight_sum=row_sum,
        far_kernel=k,
        far_out_window=far_out,
        tail_coefficient=tail_coef,
    )


def _neighbor_indices_periodic(geometry: DomainGeometry, cells) -> np.ndarray:
    m = geometry.axis_points
    idx = np.arange(geometry.n_independent).reshape(geometry.grid_shape())
    out = idx
    for ax, c in enumerate(cells):
        out = np.roll(out, -int(c), axis=ax)
    return out.reshape(-1)


def _neighbor_indices_tail(geometry: DomainGeometry, grid_idx: np.ndarray, ax: int, sgn: int):
    """Row indices with an in-window neighbour along (ax, sgn), and that neighbour."""
    n = geometry.axis_points
    src = [slice(None)] * geometry.dimension
    dst = [slice(None)] * geometry.dimension
    if sgn > 0:
        dst[ax] = slice(0, n - 1)
        src[ax] = slice(1, n)
    else:
        dst[ax] = slice(1, n)
        src[ax] = slice(0, n - 1)
    rows = grid_idx[tuple(dst)].reshape(-1)
    nbs = grid_idx[tuple(src)].reshape(-1)
    return rows, nbs


def eval_I_kappa(phi: GridFunction, index: int, kappa: float | None = None) -> float:
    """Near-field part at one node: second-order Taylor model of the cut-off integral.

    The principal value of the odd first-order part vanishes exactly; what
    remains is -c_norm * omega_n * kappa/(2n) * Laplacian(phi), with the
    Laplacian replaced by the central second difference.
    """
    geo = phi.geometry
    kappa = geo.spacing if kappa is None else float(kappa)
    if kappa <= 0:
        raise SpecError("kappa must be positive")
    vals = _near_field(geo, phi.independent, kappa, normalization_constant(geo.dimension))
    if not (0 <= index < geo.n_independent):
        raise GeometryError(f"node index {index} outside grid of {geo.n_independent} nodes")
    return float(vals[index])


def eval_I_sup_kappa(
    u: GridFunction,
    index: int,
    kappa: float | None = None,
    tail_radius: float | None = None,
) -> float:
    """Far-field quadrature at one node, including the closed-form tail."""
    geo = u.geometry
    if not (0 <= index < geo.n_independent):
        raise GeometryError(f"node index {index} outside grid of {geo.n_independent} nodes")
    h = geo.spacing
    c_norm = normalization_constant(geo.dimension)
    kappa = h if kappa is None else float(kappa)
    tail_radius = default_tail_radius(geo) if tail_radius is None else float(tail_radius)
    if not (0 < kappa < tail_radius):
        raise SpecError("need 0 < kappa < tail_radius")
    w = u.independent
    if geo.dimension == 1:
        k, lattice_total = _far_kernel_1d(geo, kappa, tail_radius, c_norm)
    else:
        k, lattice_total = _far_kernel_2d(geo, kappa, tail_radius, c_norm)
    tail_coef = c_norm * sphere_area(geo.dimension) / tail_radius
    m = geo.axis_points
    if geo.periodic:
        if geo.dimension == 1:
            q = (np.arange(m) - index) % m
            wts = k[q]
        else:
            ix, iy = divmod(index, m)
            qx = (np.arange(m) - ix) % m
            qy = (np.arange(m) - iy) % m
            wts = k[np.ix_(qx, qy)].reshape(-1)
        wts = wts.copy()
        wts[index] = 0.0
        far = float(np.sum(wts) * w[index] - wts @ w)
        return far + tail_coef * (w[index] - float(np.mean(w)))
    if geo.dimension == 1:
        qd = np.abs(np.arange(m) - index)
        wts = np.where(qd < k.size, k[np.minimum(qd, k.size - 1)], 0.0)
    else:
        ix, iy = divmod(index, m)
        qx = np.abs(np.arange(m) - ix)
        qy = np.abs(np.arange(m) - iy)
        wts = k[np.ix_(qx, qy)].reshape(-1)
    wts = wts.copy()
    wts[index] = 0.0
    in_window = float(np.sum(wts) * w[index] - wts @ w)
    out_coef = max(lattice_total - float(np.sum(wts)), 0.0) + tail_coef
    return in_window + out_coef * (w[index] - geo.tail_value)


def fraclap(
    u: GridFunction,
    kappa: float | None = None,
    tail_radius: float | None = None,
    quad: KernelQuadrature | None = None,
) -> GridFunction:
    """Half-Laplacian of u as a grid function (near + far splitting at kappa)."""
    if quad is None:
        quad = build_quadrature(u.geometry, kappa=kappa, tail_radius=tail_radius)
    out = quad.apply(u.independent)
    return GridFunction.from_independent(u.geometry, out)
