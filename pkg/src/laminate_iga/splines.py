"""Univariate B-spline spaces and their in-plane x thickness tensor product.

All indices are 0-based. The global function index of the tensor-product
space is ``i = i_t * n_s + i_s`` with ``i_s = i_v * n_u + i_u``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class DomainError(ValueError):
    """A parametric coordinate fell outside the unit interval."""


@dataclass(frozen=True, eq=False)
class KnotVector:
    """Open (clamped) knot vector on [0, 1] together with a spline degree.

    Args:
        knots: nondecreasing knots; the first and last ``p+1`` must equal
            0 and 1 respectively.
        degree: spline degree ``p >= 1``.
    """

    knots: np.ndarray
    degree: int

    def __post_init__(self):
        kv = np.asarray(self.knots, dtype=float)
        p = int(self.degree)
        if p < 1:
            raise ValueError("degree must be >= 1")
        if kv.ndim != 1 or kv.size < 2 * p + 2:
            raise ValueError("knot vector needs at least 2*p+2 entries")
        if np.any(np.diff(kv) < 0):
            raise ValueError("knots must be nondecreasing")
        if np.any(kv[: p + 1] != 0.0) or np.any(kv[-(p + 1):] != 1.0):
            raise ValueError("knot vector must be clamped on [0, 1]")
        kv.setflags(write=False)
        object.__setattr__(self, "knots", kv)
        object.__setattr__(self, "degree", p)

    @property
    def p(self) -> int:
        return self.degree

    @property
    def n(self) -> int:
        """Number of basis functions."""
        return self.knots.size - self.degree - 1

    @property
    def breaks(self) -> np.ndarray:
        """Distinct knot values."""
        return np.unique(self.knots)

    @property
    def n_elements(self) -> int:
        return self.breaks.size - 1

    def __eq__(self, other):
        if not isinstance(other, KnotVector):
            return NotImplemented
        return self.degree == other.degree and np.array_equal(self.knots, other.knots)

    def __hash__(self):
        return hash((self.degree, self.knots.tobytes()))

    def __repr__(self):
        return f"KnotVector({self.knots.tolist()!r}, degree={self.degree})"

    def find_span(self, x) -> np.ndarray:
        """Knot-span index ``k`` with ``knots[k] <= x < knots[k+1]`` (x=1 -> last span)."""
        x = np.asarray(x, dtype=float)
        if np.any((x < 0.0) | (x > 1.0)) or np.any(np.isnan(x)):
            raise DomainError("parametric coordinate outside [0, 1]")
        span = np.searchsorted(self.knots, x, side="right") - 1
        return np.clip(span, self.degree, self.n - 1)


def uniform_knot_vector(degree: int, n_elements: int) -> KnotVector:
    """Clamped uniform knot vector with maximal C^{p-1} continuity."""
    if n_elements < 1:
        raise ValueError("n_elements must be >= 1")
    interior = np.arange(1, n_elements) / n_elements
    knots = np.concatenate([np.zeros(degree + 1), interior, np.ones(degree + 1)])
    return KnotVector(knots, degree)


def uniform_refine(kv: KnotVector, n_elements: int) -> KnotVector:
    """Replace ``kv`` by the uniform maximal-continuity space of the same degree."""
    return uniform_knot_vector(kv.degree, n_elements)


class BasisEval1D(NamedTuple):
    point: float
    first_active: int
    values: np.ndarray
    derivs: np.ndarray


def basis_funs_ders(kv: KnotVector, x):
    """Vectorized Cox-de Boor evaluation of the active functions and first derivatives.

    Args:
        kv: the spline space.
        x: array of points in [0, 1].

    Returns:
        ``(first_active, values, derivs)`` with shapes ``(N,)``, ``(N, p+1)``
        and ``(N, p+1)``; column ``a`` belongs to function ``first_active + a``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    U = kv.knots
    p = kv.degree
    span = kv.find_span(x)
    npts = x.size

    left = np.empty((npts, p + 1))
    right = np.empty((npts, p + 1))
    N = np.zeros((npts, p + 1))
    N[:, 0] = 1.0
    lower = None
    for j in range(1, p + 1):
        left[:, j] = x - U[span + 1 - j]
        right[:, j] = U[span + j] - x
        saved = np.zeros(npts)
        for r in range(j):
            temp = N[:, r] / (right[:, r + 1] + left[:, j - r])
            N[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        N[:, j] = saved
        if j == p - 1:
            lower = N[:, :p].copy()
    if p == 1:
        lower = np.ones((npts, 1))

    # N'_{i,p} = p N_{i,p-1}/(U_{i+p}-U_i) - p N_{i+1,p-1}/(U_{i+p+1}-U_{i+1})
    first = span - p
    derivs = np.zeros((npts, p + 1))
    for a in range(p + 1):
        i = first + a
        if a >= 1:
            den = U[i + p] - U[i]
            derivs[:, a] += np.where(den > 0, p * lower[:, a - 1] / np.where(den > 0, den, 1.0), 0.0)
        if a <= p - 1:
            den = U[i + p + 1] - U[i + 1]
            derivs[:, a] -= np.where(den > 0, p * lower[:, a] / np.where(den > 0, den, 1.0), 0.0)
    return first, N, derivs


def eval_basis(kv: KnotVector, x: float) -> BasisEval1D:
    """Active basis functions and their first derivatives at a single point."""
    first, vals, ders = basis_funs_ders(kv, [x])
    return BasisEval1D(float(x), int(first[0]), vals[0], ders[0])


class KnotSpan(NamedTuple):
    start: float
    end: float
    first_active: int
    degree: int

    @property
    def functions(self) -> range:
        return range(self.first_active, self.first_active + self.degree + 1)


def element_spans(kv: KnotVector) -> list[KnotSpan]:
    """Nonempty knot spans in increasing order with their active functions."""
    U = kv.knots
    p = kv.degree
    spans = []
    for k in range(p, kv.n):
        if U[k + 1] > U[k]:
            spans.append(KnotSpan(float(U[k]), float(U[k + 1]), k - p, p))
    return spans


@dataclass(frozen=True)
class TensorProductSpace:
    """In-plane (u, v) x thickness (t) B-spline space."""

    u: KnotVector
    v: KnotVector
    t: KnotVector

    @property
    def n_u(self) -> int:
        return self.u.n

    @property
    def n_v(self) -> int:
        return self.v.n

    @property
    def n_s(self) -> int:
        return self.u.n * self.v.n

    @property
    def n_t(self) -> int:
        return self.t.n

    @property
    def n(self) -> int:
        return self.n_s * self.n_t

    @property
    def ndofs(self) -> int:
        return 3 * self.n

    def inplane_index(self, i_u, i_v):
        return np.asarray(i_v) * self.n_u + np.asarray(i_u)

    def flat_index(self, i_u, i_v, i_t):
        return np.asarray(i_t) * self.n_s + self.inplane_index(i_u, i_v)

    def split_index(self, i):
        """Inverse of :meth:`flat_index`: returns ``(i_u, i_v, i_t)``."""
        i_t, i_s = np.divmod(i, self.n_s)
        i_v, i_u = np.divmod(i_s, self.n_u)
        return i_u, i_v, i_t
