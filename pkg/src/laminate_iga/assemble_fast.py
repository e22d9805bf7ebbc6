"""Fast assembly from cached in-plane operators and 1D thickness integrals.

With ``B^i = B1^{i_s} T^{i_t} + B2^{i_s} T'^{i_t}`` the block ``K^{ij}`` is a
sum over layers of four products (in-plane 3x3 block) x (thickness scalar).
The in-plane factors depend on a layer only through its material, so they
are computed once per distinct material configuration; all layer
dependence moves into cheap thickness integrals.

Thickness integrals follow the naming ``Q11 = int T_i T_j``,
``Q12 = int T'_i T_j``, ``Q21 = int T_i T'_j``, ``Q22 = int T'_i T'_j``.
Since ``P12 = int B1^T D B2`` carries ``T_i T'_j``, it pairs with ``Q21``
(and ``P21`` with ``Q12``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import ExtrudedGeometry
from .materials import Layup, MaterialConfig, angle_decomposition, angle_weights
from .problem import (
    AssemblyStats,
    InPlaneQuadrature,
    ProblemSetup,
    element_batches,
    inplane_quadrature,
    map_batches,
    pattern_positions,
    strain_displacement,
    support_pattern,
    thickness_quadrature,
)
from .sparse import SparseMatrixBuilder
from .splines import TensorProductSpace, element_spans

PAIRS = ("11", "12", "21", "22")
# thickness integral paired with P_ab in the combination, as an index into PAIRS
_Q_FOR_P = np.array([0, 2, 1, 3])

_BATCH_FLOATS = 4_000_000


@dataclass
class InPlaneOperators:
    """The four operators ``P_ab`` (ab in 11, 12, 21, 22) for one material.

    ``blocks[k, n]`` is the 3x3 block of pair ``PAIRS[k]`` coupling in-plane
    functions ``rows[n]`` and ``cols[n]``.
    """

    rows: np.ndarray
    cols: np.ndarray
    blocks: np.ndarray
    n_s: int

    def get(self, pair: str) -> np.ndarray:
        return self.blocks[PAIRS.index(pair)]

    def block(self, pair: str, i_s: int, j_s: int) -> np.ndarray:
        keys = self.rows * self.n_s + self.cols
        pos = np.searchsorted(keys, i_s * self.n_s + j_s)
        if pos >= keys.size or keys[pos] != i_s * self.n_s + j_s:
            return np.zeros((3, 3))
        return self.get(pair)[pos]

    def dense(self, pair: str) -> np.ndarray:
        """``(3 n_s, 3 n_s)`` dense matrix of one operator (for testing)."""
        out = np.zeros((self.n_s, 3, self.n_s, 3))
        out[self.rows, :, self.cols, :] = self.get(pair)
        return out.reshape(3 * self.n_s, 3 * self.n_s)


@dataclass
class ThicknessOperators:
    """Per-layer 1D integrals ``q[l, k]`` for ``k`` in (11, 12, 21, 22), each ``n_t x n_t``."""

    q: np.ndarray

    @property
    def q11(self):
        return self.q[:, 0]

    @property
    def q12(self):
        return self.q[:, 1]

    @property
    def q21(self):
        return self.q[:, 2]

    @property
    def q22(self):
        return self.q[:, 3]


def _scatter_pattern(ip: InPlaneQuadrature, n_s: int, pattern, local_fn, threads: int = 1):
    """Accumulate per-element ``(4, E, F, F, 3, 3)`` blocks into the in-plane pattern."""
    rows, cols = pattern
    npairs = rows.size
    F = ip.values.shape[2]
    batches = element_batches(ip.n_elements, _BATCH_FLOATS // (ip.n_points * 36 * F))

    def work(els):
        local = local_fn(els)
        pos = pattern_positions(ip.active[els], rows, cols, n_s).ravel()
        vals = local.reshape(4, pos.size, 9)
        out = np.empty((4, npairs, 9))
        for k in range(4):
            for c in range(9):
                out[k, :, c] = np.bincount(pos, weights=vals[k, :, c], minlength=npairs)
        return out

    blocks = np.zeros((4, npairs, 9))
    for part in map_batches(work, batches, threads):
        blocks += part
    return blocks.reshape(4, npairs, 3, 3)


def _voigt_local_operators(ip: InPlaneQuadrature, D: np.ndarray):
    """Element-local ``P_ab`` from split strain-displacement matrices."""

    def local(els):
        G = ip.inv_t[els]
        S = ip.values[els]
        grad_v = np.matmul(G[..., :, :2], ip.grads[els])
        w_vec = G[..., :, 2:3] * S[:, :, None, :]
        Bc = strain_displacement(np.concatenate([grad_v, w_vec], axis=-1))
        nb, Q, _, K = Bc.shape
        DB = np.matmul(D, Bc) * ip.wdet[els][:, :, None, None]
        Pe = np.matmul(Bc.reshape(nb, Q * 6, K).transpose(0, 2, 1), DB.reshape(nb, Q * 6, K))
        F = K // 6
        Pe = Pe.reshape(nb, 2, F, 3, 2, F, 3).transpose(1, 4, 0, 2, 5, 3, 6)
        return Pe.reshape(4, nb, F, F, 3, 3)

    return local


def inplane_operators_for_voigt(
    space: TensorProductSpace,
    ip: InPlaneQuadrature,
    D: np.ndarray,
    *,
    stats: Optional[AssemblyStats] = None,
    threads: int = 1,
    pattern=None,
) -> InPlaneOperators:
    """In-plane operators for an arbitrary (possibly non-physical) 6x6 matrix."""
    pattern = pattern if pattern is not None else support_pattern(ip.active, space.n_s)
    blocks = _scatter_pattern(ip, space.n_s, pattern, _voigt_local_operators(ip, np.asarray(D)), threads)
    if stats is not None:
        stats.inplane_operator_calls += 1
        stats.qpoint_visits += ip.n_elements * ip.n_points
    return InPlaneOperators(pattern[0], pattern[1], blocks, space.n_s)


def compute_inplane_operators(
    space: TensorProductSpace,
    geom: ExtrudedGeometry,
    config: MaterialConfig,
    *,
    ip: Optional[InPlaneQuadrature] = None,
    stats: Optional[AssemblyStats] = None,
    threads: int = 1,
) -> InPlaneOperators:
    """``P_ab = int B_a^T D B_b |det DF|`` over the in-plane domain for one material."""
    ip = ip if ip is not None else inplane_quadrature(space, geom)
    return inplane_operators_for_voigt(space, ip, config.voigt, stats=stats, threads=threads)


def compute_thickness_operators(
    space: TensorProductSpace, layup: Layup, n_points: Optional[int] = None
) -> ThicknessOperators:
    """Per-layer integrals of ``T T``, ``T' T``, ``T T'`` and ``T' T'`` by per-cell Gauss rules."""
    kv = space.t
    tq = thickness_quadrature(kv, layup.interfaces, n_points)
    C, nq, Ft = tq.values.shape
    w = tq.weights[:, :, None, None]
    T = tq.values[:, :, :, None]
    dT = tq.derivs[:, :, :, None]
    Tt = tq.values[:, :, None, :]
    dTt = tq.derivs[:, :, None, :]
    # (4, C, Ft, Ft) local cell integrals
    local = np.stack([(w * a * b).sum(axis=1) for a, b in ((T, Tt), (dT, Tt), (T, dTt), (dT, dTt))])
    idx = tq.first[:, None] + np.arange(Ft)
    q = np.zeros((layup.m, 4, kv.n, kv.n))
    for k in range(4):
        np.add.at(q[:, k], (tq.layer[:, None, None], idx[:, :, None], idx[:, None, :]), local[k])
    return ThicknessOperators(q)


def thickness_pattern(space: TensorProductSpace):
    kv = space.t
    active = np.array([[s.first_active + a for a in range(kv.p + 1)] for s in element_spans(kv)])
    return support_pattern(active, kv.n)


def combine(
    space: TensorProductSpace,
    operators: Sequence[InPlaneOperators],
    weights: np.ndarray,
):
    """``K^{ij} = sum_c sum_ab P_{c,ab}[i_s, j_s] * weights[c, ab, i_t, j_t]``.

    ``weights`` are already in P-pairing order (see module docstring).
    """
    ti, tj = thickness_pattern(space)
    P0 = operators[0]
    blocks = np.zeros((P0.rows.size, ti.size, 3, 3))
    for c, P in enumerate(operators):
        wt = weights[c][:, ti, tj]
        for k in range(4):
            blocks += P.blocks[k][:, None] * wt[k][None, :, None, None]
    n_s = space.n_s
    I = ti[None, :] * n_s + P0.rows[:, None]
    J = tj[None, :] * n_s + P0.cols[:, None]
    builder = SparseMatrixBuilder(space.n)
    builder.add_blocks(I, J, blocks)
    return builder.finalize()


def assemble_fast(
    setup: ProblemSetup,
    *,
    decompose_angles: bool = False,
    reduce_layers: bool = True,
    stats: Optional[AssemblyStats] = None,
    threads: int = 1,
    ip: Optional[InPlaneQuadrature] = None,
):
    """Assemble the stiffness matrix with in-plane operators cached per material.

    Args:
        setup: problem to assemble.
        decompose_angles: build in-plane operators for the five angle-independent
            matrices of each distinct orthotropic material instead of one per
            (material, angle); at most 5 operator sets per material.
        reduce_layers: pre-sum thickness integrals per material before the
            combination (the combination cost then no longer grows with the
            number of layers). ``False`` loops over layers naively.
        stats: optional work counters.
        threads: worker threads for the in-plane operator computation.
        ip: precomputed in-plane quadrature data.
    """
    space, layup = setup.space, setup.layup
    ip = ip if ip is not None else setup.inplane_quadrature()
    pattern = support_pattern(ip.active, space.n_s)
    Q = compute_thickness_operators(space, layup, setup.thickness_points)
    # R[l, ab] = int f_a(T_i) f_b(T_j) with f_1 = T, f_2 = T'
    R = Q.q[:, _Q_FOR_P]

    def ops_for(D):
        return inplane_operators_for_voigt(space, ip, D, stats=stats, threads=threads, pattern=pattern)

    if decompose_angles:
        operators = []
        by_material: dict = {}
        for l, cfg in enumerate(layup.configs):
            by_material.setdefault(cfg.constants, []).append(l)
        weights = []
        for constants, layers in by_material.items():
            A = angle_decomposition(constants)
            angles = np.array([layup.configs[l].angle for l in layers])
            w = angle_weights(angles)  # (n_layers, 5)
            for k in range(5):
                operators.append(ops_for(A[k]))
                weights.append(np.einsum("l,lkij->kij", w[:, k], R[layers]))
        K = combine(space, operators, np.stack(weights))
    else:
        operators = [ops_for(cfg.voigt) for cfg in layup.distinct_configs]
        if reduce_layers:
            qt = np.zeros((layup.m_bar,) + R.shape[1:])
            for l, c in enumerate(layup.config_ids):
                qt[c] += R[l]
            K = combine(space, operators, qt)
        else:
            K = combine(space, [operators[c] for c in layup.config_ids], R)
    if stats is not None:
        stats.inplane_elements += ip.n_elements
    return K
