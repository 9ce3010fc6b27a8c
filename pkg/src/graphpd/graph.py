"""Similarity kernel and mutual top-k graph construction.

The kernel is K_ij = exp(-d(x_i, x_j)/h) with h the mean distance over all
distinct pairs. Nodes are connected by comparing kernel columns (each node's
similarity profile): an edge (i, j) exists iff column i is among the k
Euclidean-closest columns to column j, or vice versa. Ties on column distance
break by ascending node index, so construction is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import pairwise_distances
from .errors import DataError


@dataclass(frozen=True)
class Kernel:
    matrix: np.ndarray
    bandwidth_h: float


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Symmetric binary adjacency, stored as a sorted (i < j) edge list."""

    n: int
    edges: np.ndarray  # (e, 2) int array, i < j, lexicographically sorted
    degrees: np.ndarray  # (n,) int array

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        if len(self.edges):
            i, j = self.edges[:, 0], self.edges[:, 1]
            A[i, j] = 1.0
            A[j, i] = 1.0
        return A

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in self.edges}


def bandwidth(D: np.ndarray) -> float:
    """Mean distance over the n(n-1)/2 distinct pairs (strict lower triangle)."""
    n = D.shape[0]
    if n < 2:
        raise DataError("too-few-points", "bandwidth needs at least 2 points")
    h = float(np.sum(np.tril(D, -1)) / (n * (n - 1) / 2))
    if h == 0.0:
        raise DataError("degenerate-dataset", "all points identical: bandwidth is 0")
    return h


def kernel(D: np.ndarray, h: float) -> Kernel:
    if h <= 0:
        raise DataError("bad-bandwidth", f"bandwidth must be positive, got {h}")
    return Kernel(matrix=np.exp(-D / h), bandwidth_h=h)


def kernel_from_features(X: np.ndarray, distance: str) -> Kernel:
    D = pairwise_distances(X, distance)
    return kernel(D, bandwidth(D))


def _topk_columns(K: np.ndarray, k: int) -> np.ndarray:
    """(n, k) indices of the k closest kernel columns per node, self excluded.

    Column distance is plain Euclidean over all n coordinates. Stable argsort
    gives the ascending-index tie rule.
    """
    C = pairwise_distances(K.T, "euclidean")
    np.fill_diagonal(C, np.inf)  # a node is never its own neighbor candidate
    order = np.argsort(C, axis=1, kind="stable")
    return order[:, :k]


def build_graph(K: Kernel, k: int) -> AdjacencyMatrix:
    """Mutual top-k graph over kernel columns (edge if either side ranks the other)."""
    n = K.matrix.shape[0]
    if not 1 <= k <= n - 1:
        raise DataError("k-too-large", f"need 1 <= k <= n-1 = {n - 1}, got {k}")
    top = _topk_columns(K.matrix, k)
    pairs = set()
    for j in range(n):
        for i in top[j]:
            a, b = (int(i), j) if i < j else (j, int(i))
            pairs.add((a, b))
    edges = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)
    degrees = np.zeros(n, dtype=np.int64)
    for a, b in edges:
        degrees[a] += 1
        degrees[b] += 1
    return AdjacencyMatrix(n=n, edges=edges, degrees=degrees)


def build_graph_from_features(X: np.ndarray, distance: str, k: int) -> AdjacencyMatrix:
    return build_graph(kernel_from_features(X, distance), k)


def write_edge_list(adj: AdjacencyMatrix, path) -> None:
    """One "i<TAB>j" line per edge, i < j, sorted."""
    with open(path, "w", encoding="utf-8") as f:
        for i, j in adj.edges:
            f.write(f"{i}\t{j}\n")
