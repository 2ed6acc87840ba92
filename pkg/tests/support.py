"""Shared builders for test problems."""

import json

import numpy as np

from fracisaacs.grids import DomainGeometry
from fracisaacs.problem import CoefficientField, ControlGrid, ProblemSpec


def manufactured_spec(points: int) -> ProblemSpec:
    """Problem with known solution u*(x) = cos(x).

    Single control, a = 1, b = 1, c = 2; the forcing is chosen so that
    f + c u* + b u*' + (-lap)^{1/2} u* = 0, using (-lap)^{1/2} cos = cos:
    f = -(2 cos x - sin x + cos x).
    """
    geo = DomainGeometry(1, np.pi, points, "periodic")
    x = geo.axis()
    f = -(2.0 * np.cos(x) - np.sin(x) + np.cos(x))
    return ProblemSpec.from_tables(
        geo,
        ControlGrid(("a0",), ("b0",)),
        a=np.ones((1, 1, points)),
        b=np.ones((1, 1, points, 1)),
        c=np.full((1, 1, points), 2.0),
        f=f[None, None, :],
    )


def manufactured_truth(spec: ProblemSpec) -> np.ndarray:
    return np.cos(spec.geometry.axis())


def random_spec(rng, points: int = 65, n_alpha: int = 2, n_beta: int = 2) -> ProblemSpec:
    """Smooth random tables satisfying the structural assumptions with margin.

    Drift slopes stay below 0.4 while c >= 1.05, so the threshold
    lambda > 2*K1 holds for every draw.
    """
    geo = DomainGeometry(1, np.pi, points, "periodic")
    x = geo.axis_independent()
    m = geo.n_independent

    def trig(amp):
        k = int(rng.integers(1, 3))
        phase = rng.uniform(0, 2 * np.pi)
        return amp * rng.uniform(0.3, 1.0) * np.sin(k * x + phase)

    a = np.empty((n_alpha, n_beta, m))
    b = np.empty((n_alpha, n_beta, m, 1))
    c = np.empty((n_alpha, n_beta, m))
    f = np.empty((n_alpha, n_beta, m))
    for i in range(n_alpha):
        for j in range(n_beta):
            a[i, j] = 1.0 + trig(0.4)
            b[i, j, :, 0] = trig(0.2)
            c[i, j] = 1.3 + trig(0.25)
            f[i, j] = trig(2.0)
    controls = ControlGrid(
        tuple(f"a{i}" for i in range(n_alpha)), tuple(f"b{j}" for j in range(n_beta))
    )
    return ProblemSpec(geo, controls, CoefficientField(a=a, b=b, c=c, f=f))


def manufactured_spec_dict(points: int) -> dict:
    """JSON-ready problem-spec payload for the manufactured problem."""
    x = np.linspace(-np.pi, np.pi, points)
    f = -(2.0 * np.cos(x) - np.sin(x) + np.cos(x))
    return {
        "dimension": 1,
        "half_width": float(np.pi),
        "points": points,
        "extension": "periodic",
        "alphas": ["a0"],
        "betas": ["b0"],
        "coefficients": {
            "a": {"kind": "const", "value": 1.0},
            "b": {"kind": "const", "value": [1.0]},
            "c": {"kind": "const", "value": 2.0},
            "f": {"values": [[f.tolist()]]},
        },
    }


def write_manufactured_json(path, points: int):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manufactured_spec_dict(points), fh)
    return path
