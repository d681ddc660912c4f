"""Sparse symmetric graphs and the shifted normalized Laplacian.

The propagation operator used throughout is

    L_hat = L_sym - I = -D^{-1/2} (A + I) D^{-1/2}

whose spectrum lies in [-1, 1], the natural domain of the polynomial
bases.  Storage is CSR; scipy.sparse supplies the matrix product kernel
while construction and validation are done here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .diffcore import Tensor, _accum, _finish
from .errors import (
    AsymmetricInputError,
    IndexOutOfRangeError,
    SelfLoopInputError,
    ShapeMismatchError,
)


@dataclass(frozen=True)
class SparseGraph:
    """Square CSR matrix; for adjacency use, values are edge weights.

    Invariants: row_offsets has num_nodes + 1 nondecreasing entries,
    column indices are strictly increasing within each row and lie in
    [0, num_nodes), and the matrix is symmetric.
    """

    num_nodes: int
    row_offsets: np.ndarray = field(repr=False)
    col_indices: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.num_nodes
        if self.row_offsets.shape != (n + 1,) or self.row_offsets[0] != 0:
            raise ShapeMismatchError(f"row_offsets must have {n + 1} entries starting at 0")
        if np.any(np.diff(self.row_offsets) < 0):
            raise ShapeMismatchError("row_offsets must be nondecreasing")
        nnz = int(self.row_offsets[-1])
        if self.col_indices.shape != (nnz,) or self.values.shape != (nnz,):
            raise ShapeMismatchError("col_indices/values length must match row_offsets[-1]")
        if nnz and (self.col_indices.min() < 0 or self.col_indices.max() >= n):
            raise IndexOutOfRangeError(f"column index outside [0, {n})")

    @property
    def nnz(self) -> int:
        return int(self.row_offsets[-1])

    def to_scipy(self) -> sp.csr_matrix:
        n = self.num_nodes
        return sp.csr_matrix((self.values, self.col_indices, self.row_offsets), shape=(n, n))

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()


@dataclass(frozen=True)
class ShiftedLaplacian:
    """The operator L_sym - I of a graph, stored as a SparseGraph-shaped CSR.

    Values are negative off the diagonal; rows of isolated nodes (when
    self-loops are disabled) are all zero.
    """

    matrix: SparseGraph

    @property
    def num_nodes(self) -> int:
        return self.matrix.num_nodes

    def to_scipy(self) -> sp.csr_matrix:
        return self.matrix.to_scipy()

    def to_dense(self) -> np.ndarray:
        return self.matrix.to_dense()


def _csr_from_scipy(m: sp.csr_matrix, num_nodes: int) -> SparseGraph:
    m = m.tocsr()
    m.sort_indices()
    return SparseGraph(
        num_nodes=num_nodes,
        row_offsets=m.indptr.astype(np.int64),
        col_indices=m.indices.astype(np.int64),
        values=m.data.astype(np.float64),
    )


def from_edge_list(edges, num_nodes: int, symmetrize: bool = True) -> SparseGraph:
    """Build an unweighted undirected graph from (src, dst) pairs.

    Duplicates (including both orientations of the same pair) collapse to a
    single weight-1 edge.  With symmetrize=False the input must already
    contain both orientations of every edge.
    """
    if num_nodes < 0:
        raise IndexOutOfRangeError("num_nodes must be nonnegative")
    e = np.asarray(edges, dtype=np.int64)
    if e.size == 0:
        e = e.reshape(0, 2)
    if e.ndim != 2 or e.shape[1] != 2:
        raise ShapeMismatchError(f"edge list must be (E, 2), got {e.shape}")
    if e.size and (e.min() < 0 or e.max() >= num_nodes):
        bad = np.flatnonzero((e < 0).any(axis=1) | (e >= num_nodes).any(axis=1))[0]
        raise IndexOutOfRangeError(f"edge {bad} references a node outside [0, {num_nodes})")
    if np.any(e[:, 0] == e[:, 1]):
        bad = np.flatnonzero(e[:, 0] == e[:, 1])[0]
        raise SelfLoopInputError(f"edge {bad} is a self-loop")

    rows, cols = e[:, 0], e[:, 1]
    if symmetrize:
        rows, cols = np.concatenate([rows, cols]), np.concatenate([cols, rows])
    data = np.ones(rows.shape[0])
    a = sp.coo_matrix((data, (rows, cols)), shape=(num_nodes, num_nodes)).tocsr()
    a.data[:] = 1.0  # duplicates were summed; collapse back to weight 1
    if (a != a.T).nnz != 0:
        raise AsymmetricInputError("edge list is not symmetric and symmetrize=False")
    return _csr_from_scipy(a, num_nodes)


def shifted_laplacian(g: SparseGraph, add_self_loops: bool = True) -> ShiftedLaplacian:
    """L_sym - I = -D^{-1/2} (A [+ I]) D^{-1/2} of a symmetric graph.

    Zero-degree nodes get a zero row instead of a division by zero.  Each
    entry is computed from a direction-independent product, so the result
    is symmetric to the last bit.
    """
    a = g.to_scipy()
    if (a != a.T).nnz != 0:
        raise AsymmetricInputError("shifted_laplacian needs a symmetric graph")
    if add_self_loops:
        a = (a + sp.identity(g.num_nodes, format="csr")).tocsr()
    deg = np.asarray(a.sum(axis=1)).ravel()
    with np.errstate(divide="ignore"):
        dinv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(deg), 0.0)

    coo = a.tocoo()
    lo = np.minimum(coo.row, coo.col)
    hi = np.maximum(coo.row, coo.col)
    vals = -(coo.data * (dinv_sqrt[lo] * dinv_sqrt[hi]))
    lhat = sp.coo_matrix((vals, (coo.row, coo.col)), shape=a.shape).tocsr()
    return ShiftedLaplacian(matrix=_csr_from_scipy(lhat, g.num_nodes))


def spmm(m: SparseGraph | ShiftedLaplacian, x: Tensor) -> Tensor:
    """Sparse @ dense product; differentiable in x, the matrix is constant."""
    csr = m.to_scipy()
    if x.data.shape[0] != csr.shape[0]:
        raise ShapeMismatchError(f"spmm: matrix is {csr.shape}, input has {x.data.shape[0]} rows")
    out_data = csr @ x.data

    def pull(g):
        _accum(x, csr.T @ g)

    return _finish(out_data, (x,), pull)
