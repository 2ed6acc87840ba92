import numpy as np
import pytest

from fracisaacs.errors import GeometryError, SpecError
from fracisaacs.grids import DomainGeometry, GridFunction, grid_lipschitz


def test_geometry_validation():
    with pytest.raises(SpecError):
        DomainGeometry(3, 1.0, 65)
    with pytest.raises(SpecError):
        DomainGeometry(1, 1.0, 4)
    with pytest.raises(SpecError):
        DomainGeometry(1, -1.0, 65)
    with pytest.raises(SpecError):
        DomainGeometry(1, 1.0, 65, "mirror")


def test_spacing_and_axis():
    geo = DomainGeometry(1, np.pi, 257, "periodic")
    assert geo.spacing == pytest.approx(2 * np.pi / 256)
    ax = geo.axis()
    assert ax[0] == -np.pi and ax[-1] == np.pi
    assert geo.axis_points == 256
    assert geo.n_independent == 256


def test_periodic_shift_wraps():
    geo = DomainGeometry(1, 1.0, 9, "periodic")
    w = np.arange(8, dtype=float)
    assert np.array_equal(geo.shift(w, 3), np.roll(w, -3))
    assert np.array_equal(geo.shift(w, -2), np.roll(w, 2))


def test_constant_tail_shift_fills():
    geo = DomainGeometry(1, 1.0, 9, "constant_tail", tail_value=7.0)
    w = np.arange(9, dtype=float)
    s = geo.shift(w, 2)
    assert np.array_equal(s[:-2], w[2:])
    assert np.all(s[-2:] == 7.0)


def test_expand_restrict_round_trip():
    geo = DomainGeometry(1, 1.0, 17, "periodic")
    w = np.sin(geo.axis_independent())
    full = geo.expand(w)
    assert full[-1] == full[0]
    assert np.array_equal(geo.restrict(full), w)

    geo2 = DomainGeometry(2, 1.0, 9, "periodic")
    w2 = np.arange(geo2.n_independent, dtype=float)
    full2 = geo2.expand(w2)
    assert full2.size == geo2.n_nodes
    assert np.array_equal(geo2.restrict(full2), w2)


def test_index_of():
    geo = DomainGeometry(1, 1.0, 9, "constant_tail")
    assert geo.index_of(0.0) == 4
    assert geo.index_of(-1.0) == 0
    with pytest.raises(GeometryError):
        geo.index_of(0.13)
    geo2 = DomainGeometry(2, 1.0, 9, "constant_tail")
    assert geo2.index_of((0.0, 0.0)) == 4 * 9 + 4


def test_grid_function_validation():
    geo = DomainGeometry(1, 1.0, 9)
    with pytest.raises(GeometryError):
        GridFunction(geo, np.zeros(5))
    with pytest.raises(SpecError):
        GridFunction(geo, np.full(9, np.nan))
    u = GridFunction(geo, np.ones(9))
    with pytest.raises(ValueError):
        u.values[0] = 2.0  # frozen


def test_grid_lipschitz_matches_slope():
    geo = DomainGeometry(1, np.pi, 513, "periodic")
    u = GridFunction(geo, np.sin(geo.axis()))
    assert grid_lipschitz(u) == pytest.approx(1.0, abs=1e-3)
