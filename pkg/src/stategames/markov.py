"""Support-graph structure of finite row-stochastic matrices.

Only the zero pattern matters here: recurrence, reachability, and
irreducibility are properties of the directed graph with an edge
``u -> v`` whenever the transition probability is positive.  Strongly
connected components come from :mod:`scipy.sparse.csgraph`; a recurrent
class is a component with no outgoing support edge (a sink of the
condensation).
"""

from __future__ import annotations

from collections import deque

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .game import ROW_SUM_TOL


def assert_row_stochastic(matrix: np.ndarray, tol: float = ROW_SUM_TOL) -> np.ndarray:
    """Return ``matrix`` as a float array, rejecting non-stochastic input."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
    if np.any(matrix < 0.0):
        raise ValueError("transition matrix has a negative entry")
    sums = matrix.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if bad.size:
        r = int(bad[0])
        raise ValueError(f"row {r} sums to {sums[r]:.12g}, not 1")
    return matrix


def support_successors(matrix: np.ndarray) -> list[list[int]]:
    """Adjacency lists of the support digraph (edges where prob > 0)."""
    matrix = np.asarray(matrix)
    return [[int(j) for j in np.flatnonzero(matrix[i] > 0.0)] for i in range(matrix.shape[0])]


def reachable_from(successors: list[list[int]], start: int) -> set[int]:
    """Nodes reachable from ``start`` in one or more steps.

    ``start`` itself is included only when it lies on a cycle (has a
    positive-probability return path).
    """
    seen: set[int] = set()
    queue = deque(successors[start])
    seen.update(successors[start])
    while queue:
        u = queue.popleft()
        for v in successors[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def scc_labels(matrix_or_sparse) -> tuple[int, np.ndarray]:
    """Strongly connected component count and per-node labels."""
    if sparse.issparse(matrix_or_sparse):
        adjacency = matrix_or_sparse
    else:
        adjacency = sparse.csr_matrix(np.asarray(matrix_or_sparse) > 0.0)
    return connected_components(adjacency, directed=True, connection="strong")


def sink_components(matrix_or_sparse) -> list[frozenset[int]]:
    """Strongly connected components with no outgoing support edge.

    For a stochastic matrix these are exactly its closed communicating
    (recurrent) classes.  Returned sorted by smallest member.
    """
    if sparse.issparse(matrix_or_sparse):
        support = matrix_or_sparse.tocoo()
        rows, cols = support.row, support.col
        mask = support.data > 0.0
        rows, cols = rows[mask], cols[mask]
        n_nodes = matrix_or_sparse.shape[0]
    else:
        matrix = np.asarray(matrix_or_sparse)
        rows, cols = np.nonzero(matrix > 0.0)
        n_nodes = matrix.shape[0]
    n_comp, labels = scc_labels(matrix_or_sparse)
    is_sink = np.ones(n_comp, dtype=bool)
    cross = labels[rows] != labels[cols]
    is_sink[labels[rows[cross]]] = False
    classes = [
        frozenset(int(i) for i in np.flatnonzero(labels == c))
        for c in range(n_comp)
        if is_sink[c]
    ]
    classes.sort(key=min)
    return classes


def recurrent_classes(matrix: np.ndarray) -> list[frozenset[int]]:
    """Closed communicating classes of a row-stochastic matrix.

    Raises ``ValueError`` for non-stochastic input.
    """
    matrix = assert_row_stochastic(matrix)
    return sink_components(matrix)


def is_irreducible(matrix: np.ndarray) -> bool:
    """Whether the support digraph is a single strongly connected component."""
    matrix = assert_row_stochastic(matrix)
    n_comp, _ = scc_labels(matrix)
    return n_comp == 1
