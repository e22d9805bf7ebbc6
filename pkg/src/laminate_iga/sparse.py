"""Triplet accumulation of 3x3-block stiffness matrices.

Finalization sorts triplets by (row, col) with a stable sort before summing
duplicates, so the result only depends on the order in which triplet chunks
were added, never on thread scheduling.
"""

from __future__ import annotations

import numpy as np
import scipy.io
import scipy.sparse


class SparseMatrixBuilder:
    """Coordinate-format accumulator for a ``3n x 3n`` matrix."""

    def __init__(self, n_functions: int):
        self.n_functions = int(n_functions)
        self.shape = (3 * self.n_functions, 3 * self.n_functions)
        self._rows: list[np.ndarray] = []
        self._cols: list[np.ndarray] = []
        self._vals: list[np.ndarray] = []

    def __len__(self):
        return sum(r.size for r in self._rows)

    def add_block(self, i: int, j: int, blk) -> None:
        """Add a 3x3 block coupling function ``i`` (rows) with ``j`` (columns)."""
        n = self.n_functions
        if not (0 <= i < n and 0 <= j < n):
            raise IndexError(f"function index out of range [0, {n})")
        blk = np.asarray(blk, dtype=float).reshape(3, 3)
        r = np.repeat(3 * i + np.arange(3), 3)
        c = np.tile(3 * j + np.arange(3), 3)
        self.add_triplets(r, c, blk.ravel())

    def add_blocks(self, i, j, blocks) -> None:
        """Vectorized :meth:`add_block`: ``blocks[..., 3, 3]`` with matching ``i``, ``j``."""
        i = np.asarray(i, dtype=np.int64).ravel()
        j = np.asarray(j, dtype=np.int64).ravel()
        blocks = np.asarray(blocks, dtype=float).reshape(-1, 3, 3)
        k = np.arange(3)
        r, c = np.broadcast_arrays(
            3 * i[:, None, None] + k[None, :, None], 3 * j[:, None, None] + k[None, None, :]
        )
        self.add_triplets(r, c, blocks)

    def add_dense(self, dofs, mat) -> None:
        """Scatter a dense local matrix; ``dofs`` are global dof indices."""
        dofs = np.asarray(dofs, dtype=np.int64)
        mat = np.asarray(mat, dtype=float)
        r = np.broadcast_to(dofs[..., :, None], mat.shape)
        c = np.broadcast_to(dofs[..., None, :], mat.shape)
        self.add_triplets(r, c, mat)

    def add_triplets(self, rows, cols, vals) -> None:
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        vals = np.asarray(vals, dtype=float).ravel()
        if not rows.size == cols.size == vals.size:
            raise ValueError("triplet arrays differ in length")
        N = self.shape[0]
        if rows.size and (rows.min() < 0 or rows.max() >= N or cols.min() < 0 or cols.max() >= N):
            raise IndexError("triplet index out of range")
        self._rows.append(rows)
        self._cols.append(cols)
        self._vals.append(vals)

    def extend(self, other: "SparseMatrixBuilder") -> None:
        if other.shape != self.shape:
            raise ValueError("builder shapes differ")
        self._rows.extend(other._rows)
        self._cols.extend(other._cols)
        self._vals.extend(other._vals)

    def triplets(self):
        if not self._rows:
            return (np.empty(0, np.int64),) * 2 + (np.empty(0),)
        return np.concatenate(self._rows), np.concatenate(self._cols), np.concatenate(self._vals)

    def finalize(self) -> scipy.sparse.csr_matrix:
        """Sum duplicates and return the CSR stiffness matrix."""
        rows, cols, vals = self.triplets()
        if rows.size == 0:
            raise ValueError("cannot finalize an empty builder")
        N = self.shape[0]
        keys = rows * N + cols
        order = np.argsort(keys, kind="stable")
        keys = keys[order]
        vals = vals[order]
        start = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
        summed = np.add.reduceat(vals, start)
        ukeys = keys[start]
        r, c = np.divmod(ukeys, N)
        indptr = np.zeros(N + 1, dtype=np.int64)
        np.cumsum(np.bincount(r, minlength=N), out=indptr[1:])
        return scipy.sparse.csr_matrix((summed, c, indptr), shape=self.shape)


def frobenius_rel_diff(a, b) -> float:
    """``||A - B||_F / max(||A||_F, ||B||_F)``."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    na = _fro(a)
    nb = _fro(b)
    scale = max(na, nb)
    if scale == 0.0:
        return 0.0
    return _fro(a - b) / scale


def _fro(a) -> float:
    if scipy.sparse.issparse(a):
        a = a.tocsr()
        return float(np.sqrt(np.dot(a.data, a.data)))
    return float(np.linalg.norm(np.asarray(a)))


def write_matrix_market(K, path) -> None:
    """Coordinate real general Matrix Market file with 1-based indices."""
    with open(path, "wb") as fh:
        scipy.io.mmwrite(fh, scipy.sparse.coo_matrix(K), symmetry="general", precision=17)
