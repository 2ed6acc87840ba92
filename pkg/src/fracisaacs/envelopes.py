"""Sup/inf convolutions and their vanishing-regularization gaps.

The sup-convolution of u at regularization eps is the exact discrete

    u_eps(x) = max over grid offsets y of [ u(x + y) - |y|^2 / eps ],

searched over |y| <= sqrt(2 * sup|u| * eps): any offset beating y = 0 must
satisfy |y|^2 <= eps (u(x+y) - u(x)) <= 2 eps sup|u|, so the cap loses
nothing.  Shifts beyond the window follow the declared extension.  The
result is semiconvex (discrete second differences >= -2 h^2 / eps) and
decreases to u as eps -> 0; for an L-Lipschitz function the sup-norm gap
is at most L^2 eps / 4.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import SpecError
from .grids import GridFunction


@dataclass(frozen=True)
class EnvelopeResult:
    envelope: GridFunction
    argmax_offsets: np.ndarray = field(repr=False)  # (nodes, dim) maximizing offset y
    epsilon: float


def _candidate_offsets(geometry, radius: float):
    """Grid offsets with |y| <= radius, ordered by |y| (then lexicographically)."""
    h = geometry.spacing
    reach = int(np.floor(radius / h + 1e-12))
    if geometry.dimension == 1:
        offs = [(j,) for j in range(-reach, reach + 1)]
    else:
        offs = [
            (jx, jy)
            for jx in range(-reach, reach + 1)
            for jy in range(-reach, reach + 1)
            if np.hypot(jx, jy) * h <= radius + 1e-12
        ]
    offs.sort(key=lambda o: (sum(c * c for c in o), o))
    return offs


def sup_convolution(u: GridFunction, epsilon: float, radius: float | None = None) -> EnvelopeResult:
    """Exact discrete sup-convolution over the truncated offset search."""
    if not (epsilon > 0):
        raise SpecError("epsilon must be positive")
    geo = u.geometry
    h = geo.spacing
    w = u.independent
    if radius is None:
        radius = float(np.sqrt(2.0 * np.max(np.abs(w)) * epsilon)) if w.size else 0.0
    env = w.copy()
    offsets = np.zeros((w.size, geo.dimension))
    for cells in _candidate_offsets(geo, radius):
        y = np.asarray(cells, dtype=float) * h
        penalty = float(y @ y) / epsilon
        cand = geo.shift(w, cells) - penalty
        better = cand > env
        if np.any(better):
            env[better] = cand[better]
            offsets[better] = y
    return EnvelopeResult(
        envelope=GridFunction.from_independent(geo, env),
        argmax_offsets=geo.expand(offsets[:, 0])[:, None]
        if geo.dimension == 1
        else _expand_offsets(geo, offsets),
        epsilon=float(epsilon),
    )


def _expand_offsets(geo, offsets):
    cols = [geo.expand(offsets[:, d]) for d in range(geo.dimension)]
    return np.stack(cols, axis=1)


def inf_convolution(u: GridFunction, epsilon: float, radius: float | None = None) -> EnvelopeResult:
    """Dual envelope: inf_conv(u) = -sup_conv(-u), touching u from below.

    Negating the function also negates its constant tail.
    """
    neg_geo = replace(u.geometry, tail_value=-u.geometry.tail_value)
    neg = GridFunction(neg_geo, -u.values)
    res = sup_convolution(neg, epsilon, radius=radius)
    return EnvelopeResult(
        envelope=GridFunction(u.geometry, -res.envelope.values),
        argmax_offsets=res.argmax_offsets,
        epsilon=res.epsilon,
    )


def gamma_gap(u: GridFunction, epsilons) -> np.ndarray:
    """Sup-norm gaps ||u_eps - u|| for a decreasing list of regularizations."""
    eps = [float(e) for e in epsilons]
    if any(e <= 0 for e in eps):
        raise SpecError("epsilons must be positive")
    if eps != sorted(eps, reverse=True):
        raise SpecError("epsilons must be sorted (decreasing)")
    gaps = []
    for e in eps:
        env = sup_convolution(u, e).envelope
        gaps.append(float(np.max(np.abs(env.values - u.values))))
    return np.asarray(gaps)
