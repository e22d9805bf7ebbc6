"""Reference assembly: full 3D Gauss quadrature, layer by layer.

Every in-plane element is integrated with ``(p+1)^2`` points in-plane and
``p+1`` points per (thickness span x layer) cell, i.e. ``m (p+1)^3`` points
for one element through the thickness. Cost grows linearly with ``m``.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .problem import (
    AssemblyStats,
    InPlaneQuadrature,
    ProblemSetup,
    ThicknessQuadrature,
    element_batches,
    map_batches,
    strain_displacement,
)
from .sparse import SparseMatrixBuilder

# float budget for the per-batch B array
_BATCH_FLOATS = 4_000_000


def _reference_gradients(ip: InPlaneQuadrature, els, Tv, dT):
    """Parametric gradients of ``S^{i_s} T^{i_t}`` at every (in-plane, thickness) point.

    Returns ``(nb, Q, nqt, 3, F * Ft)`` with function index ``a * Ft + b``.
    """
    S = ip.values[els]
    dS = ip.grads[els]
    nb, Q, F = S.shape
    nqt, Ft = Tv.shape
    g = np.empty((nb, Q, nqt, 3, F, Ft))
    g[:, :, :, 0] = dS[:, :, None, 0, :, None] * Tv[None, None, :, None, :]
    g[:, :, :, 1] = dS[:, :, None, 1, :, None] * Tv[None, None, :, None, :]
    g[:, :, :, 2] = S[:, :, None, :, None] * dT[None, None, :, None, :]
    return g.reshape(nb, Q, nqt, 3, F * Ft)


def assemble_standard(
    setup: ProblemSetup,
    *,
    stats: Optional[AssemblyStats] = None,
    threads: int = 1,
    ip: Optional[InPlaneQuadrature] = None,
    layer_voigt: Optional[np.ndarray] = None,
):
    """Assemble the free-free stiffness matrix by 3D quadrature.

    Args:
        setup: problem to assemble.
        stats: optional counters; ``qpoint_visits`` receives the number of 3D
            quadrature points visited.
        threads: worker threads over in-plane element batches.
        ip: precomputed in-plane quadrature data (computed if omitted).
        layer_voigt: ``(m, 6, 6)`` per-layer Voigt matrices overriding the
            layup's materials.

    Returns:
        ``scipy.sparse.csr_matrix`` of size ``3n x 3n``.
    """
    space = setup.space
    ip = ip if ip is not None else setup.inplane_quadrature()
    tq = setup.thickness_quadrature()
    if layer_voigt is None:
        D_layers = np.stack([cfg.voigt for cfg in setup.layup.configs])
    else:
        D_layers = np.asarray(layer_voigt, dtype=float).reshape(setup.layup.m, 6, 6)
    n_s = space.n_s
    Ft = space.t.p + 1
    F = ip.values.shape[2]
    Q = ip.n_points
    nqt = tq.weights.shape[1]
    spans = np.unique(tq.span)
    cells_of_span = {s: np.flatnonzero(tq.span == s) for s in spans}

    per_element = Q * nqt * 6 * 3 * F * Ft
    batches = element_batches(ip.n_elements, _BATCH_FLOATS // per_element)

    def work(els):
        builder = SparseMatrixBuilder(space.n)
        G = ip.inv_t[els][:, :, None]  # (nb, Q, 1, 3, 3)
        visits = 0
        for s in spans:
            cells = cells_of_span[s]
            it = tq.first[cells[0]] + np.arange(Ft)
            Kloc = np.zeros((els.size, 3 * F * Ft, 3 * F * Ft))
            for c in cells:
                ref = _reference_gradients(ip, els, tq.values[c], tq.derivs[c])
                grad = np.matmul(G, ref)
                nb = els.size
                B = strain_displacement(grad).reshape(nb, Q * nqt, 6, -1)
                w = ip.wdet[els][:, :, None] * tq.weights[c][None, None, :]
                DB = np.matmul(D_layers[tq.layer[c]], B) * w.reshape(nb, -1, 1, 1)
                K = B.shape[-1]
                Kloc += np.matmul(B.reshape(nb, -1, K).transpose(0, 2, 1), DB.reshape(nb, -1, K))
                visits += nb * Q * nqt
            funcs = (it[None, None, :] * n_s + ip.active[els][:, :, None]).reshape(els.size, F * Ft)
            dofs = (3 * funcs[:, :, None] + np.arange(3)).reshape(els.size, -1)
            builder.add_dense(dofs, Kloc)
        return builder, visits

    builder = SparseMatrixBuilder(space.n)
    total_visits = 0
    for b, visits in map_batches(work, batches, threads):
        builder.extend(b)
        total_visits += visits
    if stats is not None:
        stats.inplane_elements += ip.n_elements
        stats.qpoint_visits += total_visits
    return builder.finalize()


def _field_gradients(setup, ip, tq: ThicknessQuadrature, coeffs):
    """Physical displacement gradients ``grad u[q, comp, dir]`` per (element, cell) point."""
    space = setup.space
    u = np.asarray(coeffs, dtype=float).reshape(space.n, 3)
    Ft = space.t.p + 1
    out = []
    for c in range(tq.layer.size):
        it = tq.first[c] + np.arange(Ft)
        funcs = it[None, None, :] * space.n_s + ip.active[:, :, None]  # (E, F, Ft)
        Tv, dT = tq.values[c], tq.derivs[c]
        # parametric gradient of each basis function, (E, Q, nqt, F, Ft, 3)
        g = np.stack(
            [
                np.einsum("eqa,tb->eqtab", ip.grads[:, :, 0], Tv),
                np.einsum("eqa,tb->eqtab", ip.grads[:, :, 1], Tv),
                np.einsum("eqa,tb->eqtab", ip.values, dT),
            ],
            axis=-1,
        )
        phys = np.einsum("eqkd,eqtabd->eqtabk", ip.inv_t, g)
        grad_u = np.einsum("eabi,eqtabk->eqtik", u[funcs], phys)
        w = ip.wdet[:, :, None] * tq.weights[c][None, None, :]
        out.append((c, grad_u, w))
    return out


def reference_bilinear(setup: ProblemSetup, u_coeffs, v_coeffs) -> float:
    """``a(v, u) = int eps(v) : C : eps(u)`` by direct quadrature, without forming K.

    Coefficient vectors are ordered ``3 * i + component``.
    """
    n3 = setup.space.ndofs
    if np.size(u_coeffs) != n3 or np.size(v_coeffs) != n3:
        raise ValueError(f"coefficient vectors must have length {n3}")
    ip = setup.inplane_quadrature()
    tq = setup.thickness_quadrature()
    gu = _field_gradients(setup, ip, tq, u_coeffs)
    gv = _field_gradients(setup, ip, tq, v_coeffs)
    total = 0.0
    for (c, grad_u, w), (_, grad_v, _) in zip(gu, gv):
        C = setup.layup.configs[tq.layer[c]].tensor
        eu = 0.5 * (grad_u + np.swapaxes(grad_u, -1, -2))
        ev = 0.5 * (grad_v + np.swapaxes(grad_v, -1, -2))
        total += float(np.einsum("eqtij,ijkl,eqtkl,eqt->", ev, C, eu, w, optimize=True))
    return total
