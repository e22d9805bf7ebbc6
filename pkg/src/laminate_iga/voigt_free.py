"""In-plane operators from bracket contractions, without B or D matrices.

The bracket ``C{b, d}`` is the 3x3 matrix with
``a . (C{b, d} c) = (a (x) b) : C : (c (x) d)``, i.e. ``C{b, d}_pr = C_pqrs b_q d_s``.

For an orthotropic material with in-plane directions ``a_1``, ``a_2``,
structural tensors ``M_k = a_k (x) a_k`` and ``abar_{k,i} = M_k e_i``::

    C{e_i, e_j} = lam e_i(x)e_j + mu (d_ij I + e_j(x)e_i)
                + alpha_1 abar_1i(x)abar_1j + alpha_2 abar_2i(x)abar_2j
                + alpha_3 ((e_i.abar_1j) I + d_ij M_1 + e_j(x)abar_1i + abar_1j(x)e_i)
                + alpha_4 ((e_i.abar_2j) I + d_ij M_2 + e_j(x)abar_2i + abar_2j(x)e_i)
                + alpha_5 (e_i(x)abar_1j + abar_1i(x)e_j) + alpha_6 (e_i(x)abar_2j + abar_2i(x)e_j)
                + alpha_7 (abar_1i(x)abar_2j + abar_2i(x)abar_1j)

The ``alpha_3``/``alpha_4`` groups are the brackets of the minor- and
major-symmetric tensors ``d_pr M_qs + M_pr d_qs + d_ps M_qr + M_ps d_qr``.
The nine coefficients are fitted against the dense tensor of the
engineering constants in material axes.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Optional

import numpy as np

from .assemble_fast import _Q_FOR_P, InPlaneOperators, _scatter_pattern, combine, compute_thickness_operators
from .geometry import GeometryFrame
from .materials import MaterialConfig, OrthotropicConstants, tensor_from_voigt, voigt_from_constants
from .problem import AssemblyStats, InPlaneQuadrature, ProblemSetup, support_pattern

_I3 = np.eye(3)


def bracket(C: np.ndarray, b, d) -> np.ndarray:
    """Dense bracket ``C{b, d}`` of a 3x3x3x3 tensor."""
    return np.einsum("pqrs,q,s->pr", C, b, d)


def contraction_isotropic(lam: float, mu: float, i: int, j: int) -> np.ndarray:
    """Isotropic ``C{e_i, e_j}`` (0-based ``i``, ``j``)."""
    ei, ej = _I3[i], _I3[j]
    return lam * np.outer(ei, ej) + mu * (ei @ ej * _I3 + np.outer(ej, ei))


def _basis_tensors(a1, a2) -> np.ndarray:
    """Dense tensors whose brackets are the nine terms of the orthotropic formula."""
    d = _I3
    M1, M2 = np.outer(a1, a1), np.outer(a2, a2)

    def sym_pair(A, B):
        return np.einsum("pq,rs->pqrs", A, B) + np.einsum("pq,rs->pqrs", B, A)

    def shear_like(M):
        return (
            np.einsum("pr,qs->pqrs", d, M)
            + np.einsum("pr,qs->pqrs", M, d)
            + np.einsum("ps,qr->pqrs", d, M)
            + np.einsum("ps,qr->pqrs", M, d)
        )

    return np.stack(
        [
            np.einsum("pq,rs->pqrs", d, d),
            np.einsum("pr,qs->pqrs", d, d) + np.einsum("ps,qr->pqrs", d, d),
            np.einsum("pq,rs->pqrs", M1, M1),
            np.einsum("pq,rs->pqrs", M2, M2),
            shear_like(M1),
            shear_like(M2),
            sym_pair(M1, d),
            sym_pair(M2, d),
            sym_pair(M1, M2),
        ]
    )


_ORTHO_ENTRIES = [(0, 0, 0, 0), (1, 1, 1, 1), (2, 2, 2, 2), (0, 0, 1, 1), (0, 0, 2, 2),
                  (1, 1, 2, 2), (0, 1, 0, 1), (0, 2, 0, 2), (1, 2, 1, 2)]


@lru_cache(maxsize=None)
def orthotropic_coefficients(constants: OrthotropicConstants) -> np.ndarray:
    """``(lam, mu, alpha_1, ..., alpha_7)`` reproducing the material-axes tensor."""
    C = tensor_from_voigt(voigt_from_constants(constants))
    basis = _basis_tensors(_I3[0], _I3[1])
    idx = tuple(np.array(_ORTHO_ENTRIES).T)
    A = basis[(slice(None),) + idx].T  # (9 entries, 9 coefficients)
    coeffs = np.linalg.solve(A, C[idx])
    coeffs.setflags(write=False)
    return coeffs


def material_directions(angle: float) -> tuple[np.ndarray, np.ndarray]:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([c, s, 0.0]), np.array([-s, c, 0.0])


def contraction_orthotropic(config: MaterialConfig, i: int, j: int) -> np.ndarray:
    """Closed-form orthotropic ``C{e_i, e_j}`` (0-based ``i``, ``j``)."""
    lam, mu, a1c, a2c, a3c, a4c, a5c, a6c, a7c = orthotropic_coefficients(config.constants)
    a1, a2 = material_directions(config.angle)
    ei, ej = _I3[i], _I3[j]
    dij = float(i == j)
    b1i, b1j = a1[i] * a1, a1[j] * a1
    b2i, b2j = a2[i] * a2, a2[j] * a2
    M1, M2 = np.outer(a1, a1), np.outer(a2, a2)
    out = lam * np.outer(ei, ej) + mu * (dij * _I3 + np.outer(ej, ei))
    out += a1c * np.outer(b1i, b1j) + a2c * np.outer(b2i, b2j)
    out += a3c * ((ei @ b1j) * _I3 + dij * M1 + np.outer(ej, b1i) + np.outer(b1j, ei))
    out += a4c * ((ei @ b2j) * _I3 + dij * M2 + np.outer(ej, b2i) + np.outer(b2j, ei))
    out += a5c * (np.outer(ei, b1j) + np.outer(b1i, ej))
    out += a6c * (np.outer(ei, b2j) + np.outer(b2i, ej))
    out += a7c * (np.outer(b1i, b2j) + np.outer(b2i, b1j))
    return out


def contraction_table(config: MaterialConfig) -> np.ndarray:
    """``table[i, j] = C{e_i, e_j}``, shape ``(3, 3, 3, 3)``."""
    return np.array([[contraction_orthotropic(config, i, j) for j in range(3)] for i in range(3)])


def pullback_contraction_table(table: np.ndarray, frame: GeometryFrame) -> np.ndarray:
    """``Ct[a, b] = sum_ij C{e_i, e_j} (g^a . e_i) (g^b . e_j)``.

    ``g^a`` are the contravariant vectors (rows of ``DF^{-1}``), so that
    ``Ct{grad_hat u, grad_hat v}`` equals ``C{DF^{-T} grad_hat u, DF^{-T} grad_hat v}``.
    """
    G = frame.inv_transpose
    return np.einsum("ijxy,ia,jb->abxy", table, G, G)


def _bracket_local_operators(ip: InPlaneQuadrature, table: np.ndarray):
    def local(els):
        G = ip.inv_t[els]
        Ct = np.einsum("ijxy,eqia,eqjb->eqabxy", table, G, G, optimize=True)
        S = ip.values[els]
        dS = ip.grads[els]
        w = ip.wdet[els]
        p11 = np.einsum("eqabxy,eqai,eqbj,eq->eijxy", Ct[:, :, :2, :2], dS, dS, w, optimize=True)
        p12 = np.einsum("eqaxy,eqai,eqj,eq->eijxy", Ct[:, :, :2, 2], dS, S, w, optimize=True)
        p21 = np.einsum("eqbxy,eqi,eqbj,eq->eijxy", Ct[:, :, 2, :2], S, dS, w, optimize=True)
        p22 = np.einsum("eqxy,eqi,eqj,eq->eijxy", Ct[:, :, 2, 2], S, S, w, optimize=True)
        return np.stack([p11, p12, p21, p22])

    return local


def inplane_operators_voigt_free(
    setup: ProblemSetup,
    config: MaterialConfig,
    *,
    ip: Optional[InPlaneQuadrature] = None,
    stats: Optional[AssemblyStats] = None,
    threads: int = 1,
    pattern=None,
) -> InPlaneOperators:
    space = setup.space
    ip = ip if ip is not None else setup.inplane_quadrature()
    pattern = pattern if pattern is not None else support_pattern(ip.active, space.n_s)
    local = _bracket_local_operators(ip, contraction_table(config))
    blocks = _scatter_pattern(ip, space.n_s, pattern, local, threads)
    if stats is not None:
        stats.inplane_operator_calls += 1
        stats.qpoint_visits += ip.n_elements * ip.n_points
    return InPlaneOperators(pattern[0], pattern[1], blocks, space.n_s)


def assemble_fast_voigt_free(
    setup: ProblemSetup,
    *,
    stats: Optional[AssemblyStats] = None,
    threads: int = 1,
    ip: Optional[InPlaneQuadrature] = None,
):
    """Fast assembly with bracket-based in-plane operators (one set per distinct material)."""
    space, layup = setup.space, setup.layup
    ip = ip if ip is not None else setup.inplane_quadrature()
    pattern = support_pattern(ip.active, space.n_s)
    operators = [
        inplane_operators_voigt_free(setup, cfg, ip=ip, stats=stats, threads=threads, pattern=pattern)
        for cfg in layup.distinct_configs
    ]
    R = compute_thickness_operators(space, layup, setup.thickness_points).q[:, _Q_FOR_P]
    qt = np.zeros((layup.m_bar,) + R.shape[1:])
    for l, c in enumerate(layup.config_ids):
        qt[c] += R[l]
    if stats is not None:
        stats.inplane_elements += ip.n_elements
    return combine(space, operators, qt)
