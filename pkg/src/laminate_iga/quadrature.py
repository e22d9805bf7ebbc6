"""Gauss-Legendre rules and the composite layer-by-layer thickness rule."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np


@dataclass(frozen=True)
class QuadRule1D:
    points: np.ndarray
    weights: np.ndarray
    a: float
    b: float

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.points)))


@lru_cache(maxsize=64)
def _reference_rule(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int, a: float = 0.0, b: float = 1.0) -> QuadRule1D:
    """``n``-point Gauss-Legendre rule mapped affinely to ``(a, b)``."""
    if n < 1:
        raise ValueError("number of points must be >= 1")
    if not a < b:
        raise ValueError("need a < b")
    x, w = _reference_rule(int(n))
    half = 0.5 * (b - a)
    return QuadRule1D(a + half * (x + 1.0), half * w, float(a), float(b))


class ThicknessCell(NamedTuple):
    rule: QuadRule1D
    layer: int
    span: int


def layerwise_thickness_rule(
    thickness_spans: Sequence[tuple[float, float]],
    layer_interfaces: Sequence[float],
    n_per_cell: int,
) -> list[ThicknessCell]:
    """One Gauss rule per nonempty intersection of a knot span with a layer.

    Cells are ordered by span, then by layer. Zero-measure intersections are
    dropped.
    """
    t = np.asarray(layer_interfaces, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ValueError("need at least two layer interfaces")
    if t[0] != 0.0 or t[-1] != 1.0 or np.any(np.diff(t) <= 0.0):
        raise ValueError("interfaces must increase strictly from 0 to 1")

    cells = []
    for s, (lo, hi) in enumerate(thickness_spans):
        first = max(int(np.searchsorted(t, lo, side="right")) - 1, 0)
        for layer in range(first, t.size - 1):
            a = max(lo, t[layer])
            b = min(hi, t[layer + 1])
            if b <= a:
                if t[layer] >= hi:
                    break
                continue
            cells.append(ThicknessCell(gauss_legendre(n_per_cell, a, b), layer, s))
    return cells
