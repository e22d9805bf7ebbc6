"""Problem definition plus the per-element data shared by all assemblers."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import ExtrudedGeometry
from .materials import Layup
from .quadrature import gauss_legendre, layerwise_thickness_rule
from .splines import KnotVector, TensorProductSpace, basis_funs_ders, element_spans


@dataclass
class ProblemSetup:
    """Space, geometry and stack to assemble.

    ``inplane_points`` and ``thickness_points`` default to ``p+1`` per
    direction and per thickness cell.
    """

    space: TensorProductSpace
    geom: ExtrudedGeometry
    layup: Layup
    inplane_points: Optional[int] = None
    thickness_points: Optional[int] = None

    def __post_init__(self):
        if self.layup.m < 1:
            raise ValueError("empty layup")

    def inplane_quadrature(self) -> "InPlaneQuadrature":
        return inplane_quadrature(self.space, self.geom, self.inplane_points)

    def thickness_quadrature(self) -> "ThicknessQuadrature":
        return thickness_quadrature(self.space.t, self.layup.interfaces, self.thickness_points)


@dataclass
class AssemblyStats:
    """Work counters filled in by the assemblers."""

    inplane_elements: int = 0
    qpoint_visits: int = 0
    inplane_operator_calls: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def qpoints_per_element(self) -> float:
        return self.qpoint_visits / self.inplane_elements if self.inplane_elements else 0.0


@dataclass
class InPlaneQuadrature:
    """Basis values, parametric gradients and cached frames at all in-plane points.

    Shapes: ``active (E, F)``, ``values (E, Q, F)``, ``grads (E, Q, 2, F)``,
    ``inv_t (E, Q, 3, 3)`` and ``wdet (E, Q)`` where ``E`` counts in-plane
    elements, ``Q`` points per element and ``F = (p_u+1)(p_v+1)`` active
    functions per element.
    """

    active: np.ndarray
    values: np.ndarray
    grads: np.ndarray
    inv_t: np.ndarray
    wdet: np.ndarray

    @property
    def n_elements(self) -> int:
        return self.active.shape[0]

    @property
    def n_points(self) -> int:
        return self.values.shape[1]


def _tabulate_1d(kv, n_points):
    spans = element_spans(kv)
    pts, wts = [], []
    for sp in spans:
        rule = gauss_legendre(n_points, sp.start, sp.end)
        pts.append(rule.points)
        wts.append(rule.weights)
    pts = np.concatenate(pts)
    first, vals, ders = basis_funs_ders(kv, pts)
    ne, nq, nf = len(spans), n_points, kv.p + 1
    starts = np.array([sp.first_active for sp in spans])
    # interior Gauss points always land in their own span
    assert np.array_equal(first.reshape(ne, nq)[:, 0], starts)
    return (
        starts,
        pts.reshape(ne, nq),
        np.concatenate(wts).reshape(ne, nq),
        vals.reshape(ne, nq, nf),
        ders.reshape(ne, nq, nf),
    )


def inplane_quadrature(
    space: TensorProductSpace, geom: ExtrudedGeometry, n_points: Optional[int] = None
) -> InPlaneQuadrature:
    """Evaluate in-plane bases and geometry frames once per in-plane Gauss point.

    Elements are ordered ``e = e_v * n_elements_u + e_u``; points ``q = q_v * nq_u + q_u``;
    local functions ``a = b_v * (p_u+1) + b_u``.
    """
    sp = space
    nqu, nqv = (n_points, n_points) if n_points else (sp.u.p + 1, sp.v.p + 1)
    fu, xu, wu, Nu, dNu = _tabulate_1d(sp.u, nqu)
    fv, xv, wv, Nv, dNv = _tabulate_1d(sp.v, nqv)
    neu, nev = fu.size, fv.size
    pu1, pv1 = sp.u.p + 1, sp.v.p + 1

    # axes: (e_v, e_u, q_v, q_u, b_v, b_u)
    def outer(A, B):
        return np.einsum("uqa,vrb->vurqba", A, B).reshape(nev * neu, nqv * nqu, pv1 * pu1)

    values = outer(Nu, Nv)
    grads = np.stack([outer(dNu, Nv), outer(Nu, dNv)], axis=2)

    iu = fu[:, None] + np.arange(pu1)
    iv = fv[:, None] + np.arange(pv1)
    active = (iv[:, None, :, None] * sp.n_u + iu[None, :, None, :]).reshape(nev * neu, pv1 * pu1)

    U = np.broadcast_to(xu[None, :, None, :], (nev, neu, nqv, nqu))
    V = np.broadcast_to(xv[:, None, :, None], (nev, neu, nqv, nqu))
    W = wu[None, :, None, :] * wv[:, None, :, None]
    _, det, inv_t = geom.jacobians(U.ravel(), V.ravel())
    E, Q = nev * neu, nqv * nqu
    return InPlaneQuadrature(
        active=active,
        values=values,
        grads=grads,
        inv_t=inv_t.reshape(E, Q, 3, 3),
        wdet=(np.abs(det) * W.ravel()).reshape(E, Q),
    )


@dataclass
class ThicknessQuadrature:
    """Thickness basis data on every (knot span x layer) cell.

    Per cell ``c``: ``layer[c]``, ``span[c]``, ``first[c]`` (first active
    function), ``weights (C, nq)``, ``values (C, nq, p+1)``, ``derivs (C, nq, p+1)``.
    """

    layer: np.ndarray
    span: np.ndarray
    first: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    derivs: np.ndarray


def thickness_quadrature(kv: KnotVector, interfaces, n_points: Optional[int] = None) -> ThicknessQuadrature:
    """Per-cell thickness data; ``n_points`` defaults to ``p+1``."""
    spans = element_spans(kv)
    nq = n_points or kv.p + 1
    cells = layerwise_thickness_rule([(s.start, s.end) for s in spans], interfaces, nq)
    pts = np.concatenate([c.rule.points for c in cells])
    first, vals, ders = basis_funs_ders(kv, pts)
    C = len(cells)
    span = np.array([c.span for c in cells])
    starts = np.array([spans[s].first_active for s in span])
    assert np.array_equal(first.reshape(C, nq)[:, 0], starts)
    return ThicknessQuadrature(
        layer=np.array([c.layer for c in cells]),
        span=span,
        first=starts,
        weights=np.stack([c.rule.weights for c in cells]),
        values=vals.reshape(C, nq, kv.p + 1),
        derivs=ders.reshape(C, nq, kv.p + 1),
    )


def support_pattern(active: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Sorted unique ``(i, j)`` pairs sharing at least one element.

    Args:
        active: ``(E, F)`` active function indices per element.
        n: number of functions.
    """
    keys = (active[:, :, None] * n + active[:, None, :]).ravel()
    keys = np.unique(keys)
    return np.divmod(keys, n)


def pattern_positions(active: np.ndarray, rows: np.ndarray, cols: np.ndarray, n: int) -> np.ndarray:
    """Position of each local pair ``(active[e,a], active[e,b])`` inside the pattern."""
    keys = rows * n + cols
    local = active[:, :, None] * n + active[:, None, :]
    pos = np.searchsorted(keys, local)
    return pos


def strain_displacement(grad: np.ndarray) -> np.ndarray:
    """Voigt strain-displacement matrices from physical gradients.

    Args:
        grad: ``(..., 3, F)`` gradients of ``F`` scalar functions.

    Returns:
        ``(..., 6, 3F)`` with dofs interleaved as ``3 * f + component`` and
        rows ``(e11, e22, e33, g12, g13, g23)``.
    """
    shape = grad.shape[:-2]
    F = grad.shape[-1]
    B = np.zeros(shape + (6, 3 * F))
    gx, gy, gz = grad[..., 0, :], grad[..., 1, :], grad[..., 2, :]
    B[..., 0, 0::3] = gx
    B[..., 1, 1::3] = gy
    B[..., 2, 2::3] = gz
    B[..., 3, 0::3] = gy
    B[..., 3, 1::3] = gx
    B[..., 4, 0::3] = gz
    B[..., 4, 2::3] = gx
    B[..., 5, 1::3] = gz
    B[..., 5, 2::3] = gy
    return B


def element_batches(n_elements: int, batch_size: int) -> list[np.ndarray]:
    batch_size = max(1, int(batch_size))
    return [np.arange(s, min(s + batch_size, n_elements)) for s in range(0, n_elements, batch_size)]


def map_batches(fn, batches, threads: int = 1) -> list:
    """Apply ``fn`` to each batch, results returned in batch order."""
    if threads <= 1 or len(batches) <= 1:
        return [fn(b) for b in batches]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, batches))
