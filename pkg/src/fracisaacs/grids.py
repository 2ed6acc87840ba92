"""Uniform grids, far-field extension models, and grid functions.

The computational window is the cube [-R, R]^n sampled with `points` nodes
per axis (both endpoints included, spacing h = 2R/(points-1)).  Two
extension models describe the function beyond the window:

* ``periodic``: period 2R per axis.  The node at +R duplicates the node at
  -R, so operators act on the ``points - 1`` independent nodes per axis and
  results are expanded back with the duplicate mirrored.
* ``constant_tail``: the function equals ``tail_value`` outside the window.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, SpecError

EXTENSIONS = ("periodic", "constant_tail")


@dataclass(frozen=True)
class DomainGeometry:
    """Uniform grid on [-half_width, half_width]^dimension with an extension model."""

    dimension: int
    half_width: float
    points: int
    extension: str = "periodic"
    tail_value: float = 0.0

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise SpecError(f"dimension must be 1 or 2, got {self.dimension}")
        if self.points < 8:
            raise SpecError(f"points per axis must be >= 8, got {self.points}")
        if not (self.half_width > 0 and np.isfinite(self.half_width)):
            raise SpecError(f"half_width must be positive, got {self.half_width}")
        if self.extension not in EXTENSIONS:
            raise SpecError(f"extension must be one of {EXTENSIONS}, got {self.extension!r}")
        if not np.isfinite(self.tail_value):
            raise SpecError("tail_value must be finite")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.points - 1)

    @property
    def period(self) -> float:
        return 2.0 * self.half_width

    @property
    def periodic(self) -> bool:
        return self.extension == "periodic"

    @property
    def axis_points(self) -> int:
        """Independent nodes per axis (the +R node duplicates -R when periodic)."""
        return self.points - 1 if self.periodic else self.points

    @property
    def n_nodes(self) -> int:
        """Total nodes of the full grid, duplicates included."""
        return self.points**self.dimension

    @property
    def n_independent(self) -> int:
        return self.axis_points**self.dimension

    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.points)

    def axis_independent(self) -> np.ndarray:
        return self.axis()[: self.axis_points]

    def coords(self) -> np.ndarray:
        """Coordinates of the independent nodes, shape (n_independent, dimension)."""
        ax = self.axis_independent()
        if self.dimension == 1:
            return ax[:, None]
        gx, gy = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([gx.ravel(), gy.ravel()], axis=1)

    def coords_full(self) -> np.ndarray:
        ax = self.axis()
        if self.dimension == 1:
            return ax[:, None]
        gx, gy = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([gx.ravel(), gy.ravel()], axis=1)

    def grid_shape(self) -> tuple:
        return (self.axis_points,) * self.dimension

    def index_of(self, x) -> int:
        """Flat independent-node index of the grid point closest to x (must lie on the grid)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dimension,):
            raise GeometryError(f"point has dimension {x.shape[0]}, grid has {self.dimension}")
        h = self.spacing
        idx = []
        for c in x:
            j = (c + self.half_width) / h
            jr = int(round(j))
            if abs(j - jr) > 1e-8 or not (0 <= jr <= self.points - 1):
                raise GeometryError(f"point {x} is not a node of the grid")
            if self.periodic:
                jr %= self.axis_points
            idx.append(jr)
        if self.dimension == 1:
            return idx[0]
        return idx[0] * self.axis_points + idx[1]

    def restrict(self, full_values: np.ndarray) -> np.ndarray:
        """Drop duplicated +R nodes, returning the independent flat array."""
        v = np.asarray(full_values, dtype=float)
        if v.size != self.n_nodes:
            raise GeometryError(f"expected {self.n_nodes} values, got {v.size}")
        if not self.periodic:
            return v.copy()
        m = self.axis_points
        if self.dimension == 1:
            return v[:m].copy()
        return v.reshape(self.points, self.points)[:m, :m].ravel().copy()

    def expand(self, ind_values: np.ndarray) -> np.ndarray:
        """Rebuild the full grid array, mirroring duplicated +R nodes when periodic."""
        w = np.asarray(ind_values, dtype=float)
        if w.size != self.n_independent:
            raise GeometryError(f"expected {self.n_independent} values, got {w.size}")
        if not self.periodic:
            return w.copy()
        m = self.axis_points
        if self.dimension == 1:
            return np.concatenate([w, w[:1]])
        grid = w.reshape(m, m)
        grid = np.concatenate([grid, grid[:1, :]], axis=0)
        grid = np.concatenate([grid, grid[:, :1]], axis=1)
        return grid.ravel()

    def shift(self, ind_values: np.ndarray, cells) -> np.ndarray:
        """Values of u(x + cells*h) on the independent nodes, using the extension model."""
        w = np.asarray(ind_values, dtype=float).reshape(self.grid_shape())
        cells = (cells,) if np.isscalar(cells) else tuple(int(c) for c in cells)
        if len(cells) != self.dimension:
            raise GeometryError("shift needs one cell offset per axis")
        if self.periodic:
            out = w
            for ax, c in enumerate(cells):
                out = np.roll(out, -int(c), axis=ax)
            return out.reshape(-1)
        out = np.full_like(w, self.tail_value)
        src = [slice(None)] * self.dimension
        dst = [slice(None)] * self.dimension
        n = self.axis_points
        for ax, c in enumerate(cells):
            c = int(c)
            if abs(c) >= n:
                return out.reshape(-1)
            if c >= 0:
                dst[ax] = slice(0, n - c)
                src[ax] = slice(c, n)
            else:
                dst[ax] = slice(-c, n)
                src[ax] = slice(0, n + c)
        out[tuple(dst)] = w[tuple(src)]
        return out.reshape(-1)

    def key(self) -> tuple:
        return (self.dimension, self.half_width, self.points, self.extension, self.tail_value)


@dataclass(frozen=True)
class GridFunction:
    """Real values on the full grid (duplicates included) with the geometry's extension."""

    geometry: DomainGeometry
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size != self.geometry.n_nodes:
            raise GeometryError(
                f"values array has {v.size} entries, geometry needs {self.geometry.n_nodes}"
            )
        if not np.all(np.isfinite(v)):
            raise SpecError("grid function contains non-finite values")
        v = v.reshape(-1).copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, geometry: DomainGeometry, fn) -> "GridFunction":
        pts = geometry.coords_full()
        if geometry.dimension == 1:
            vals = np.asarray([fn(p[0]) for p in pts], dtype=float)
        else:
            vals = np.asarray([fn(p[0], p[1]) for p in pts], dtype=float)
        return cls(geometry, vals)

    @classmethod
    def from_independent(cls, geometry: DomainGeometry, ind_values) -> "GridFunction":
        return cls(geometry, geometry.expand(np.asarray(ind_values, dtype=float)))

    @property
    def independent(self) -> np.ndarray:
        return self.geometry.restrict(self.values)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def index_of(self, x) -> int:
        return self.geometry.index_of(x)


def require_same_geometry(a: DomainGeometry, b: DomainGeometry):
    if a.key() != b.key():
        raise GeometryError(f"geometry mismatch: {a.key()} vs {b.key()}")


def grid_lipschitz(u: GridFunction) -> float:
    """Largest slope between neighbouring nodes (discrete Lipschitz constant of u)."""
    geo = u.geometry
    w = u.independent.reshape(geo.grid_shape())
    h = geo.spacing
    worst = 0.0
    for ax in range(geo.dimension):
        if geo.periodic:
            d = np.roll(w, -1, axis=ax) - w
        else:
            d = np.diff(w, axis=ax)
        if d.size:
            worst = max(worst, float(np.max(np.abs(d))) / h)
    return worst
