"""First-order rigidity matrix, interior/boundary partition, ranks and null spaces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateError, DimensionError, OrderingError
from .packing import K, ContactGraph

TOL_RANK = 1e-10
DENSE_COLUMN_LIMIT = 4096


@dataclass(frozen=True)
class RigidityMatrix:
    """E x 2N matrix; row l carries -q at the place of i_l and +q at the place of j_l.

    Stored dense up to ``DENSE_COLUMN_LIMIT`` columns, CSR above.
    """

    entries: np.ndarray | sp.csr_matrix
    edge_index: tuple[tuple[int, int], ...]

    @property
    def shape(self):
        return self.entries.shape

    def dense(self) -> np.ndarray:
        return self.entries.toarray() if sp.issparse(self.entries) else np.asarray(self.entries)

    def __matmul__(self, v):
        return self.entries @ v


def assemble_rigidity_matrix(graph: ContactGraph, force_sparse: bool = False) -> RigidityMatrix:
    E, N = graph.n_edges, graph.n_vertices
    q = graph.edge_units
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    rows = np.repeat(np.arange(E), 4)
    cols = np.stack([2 * i, 2 * i + 1, 2 * j, 2 * j + 1], axis=1).reshape(-1)
    vals = np.stack([-q[:, 0], -q[:, 1], q[:, 0], q[:, 1]], axis=1).reshape(-1)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(E, 2 * N))
    if not force_sparse and 2 * N <= DENSE_COLUMN_LIMIT:
        mat = mat.toarray()
    return RigidityMatrix(mat, tuple((int(a), int(b)) for a, b in graph.edges))


@dataclass(frozen=True)
class PartitionedSystem:
    R: np.ndarray
    R_b: np.ndarray
    a: np.ndarray
    g: np.ndarray
    graph: ContactGraph


def partition_system(R_full: RigidityMatrix, graph: ContactGraph, g) -> PartitionedSystem:
    """Split columns interior | boundary and form ``a = R_b g``."""
    ni, nb = graph.interior_count, graph.boundary_count
    if R_full.shape != (graph.n_edges, 2 * (ni + nb)):
        raise DimensionError(f"matrix shape {R_full.shape} does not match graph")
    if tuple(R_full.edge_index) != tuple((int(a), int(b)) for a, b in graph.edges):
        raise OrderingError("matrix rows do not follow the graph edge order")
    if len(graph.original_ids) != ni + nb:
        raise OrderingError("graph ordering metadata is inconsistent")
    g = np.asarray(g, dtype=float).reshape(-1)
    if g.shape != (2 * nb,):
        raise DimensionError(f"boundary vector has {g.size} entries, expected {2 * nb}")
    M = R_full.dense()
    R = M[:, : 2 * ni].copy()
    R_b = M[:, 2 * ni :].copy()
    for arr in (R, R_b):
        arr.setflags(write=False)
    a = R_b @ g
    a.setflags(write=False)
    return PartitionedSystem(R, R_b, a, g.copy(), graph)


def singular_values(matrix) -> np.ndarray:
    M = matrix.dense() if isinstance(matrix, RigidityMatrix) else matrix
    if sp.issparse(M):
        M = M.toarray()
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return np.zeros(0)
    return np.linalg.svd(M, compute_uv=False)


def rank_of(matrix, tol_rank: float = TOL_RANK) -> int:
    """Count singular values above ``tol_rank`` times the largest one."""
    s = singular_values(matrix)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol_rank * s[0]))


def null_space_dim(matrix, tol_rank: float = TOL_RANK) -> int:
    M = matrix.dense() if isinstance(matrix, RigidityMatrix) else np.asarray(matrix)
    return M.shape[1] - rank_of(M, tol_rank)


def rigid_motion_basis(graph: ContactGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Two translations and the unit rotation about the centroid, as 2N-vectors."""
    x = graph.vertex_positions
    n = len(x)
    tx = np.tile([1.0, 0.0], n)
    ty = np.tile([0.0, 1.0], n)
    rot = ((x - x.mean(axis=0)) @ K.T).reshape(-1)
    return tx, ty, rot


def is_first_order_rigid(graph: ContactGraph, tol_rank: float = TOL_RANK) -> bool:
    """True iff the R-system has only the three rigid-motion solutions."""
    x = graph.vertex_positions
    if graph.n_vertices < 2:
        raise DegenerateError("need at least two vertices")
    if np.allclose(x, x[0], rtol=0.0, atol=0.0):
        raise DegenerateError("all vertices coincide")
    R = assemble_rigidity_matrix(graph)
    return null_space_dim(R, tol_rank) == 3


def write_matrix_market(path, matrix, comment: str = "") -> None:
    """Plain-text coordinate export for external inspection."""
    from scipy.io import mmwrite

    M = matrix.dense() if isinstance(matrix, RigidityMatrix) else np.asarray(matrix)
    mmwrite(str(path), sp.coo_matrix(M), comment=comment, precision=17)
