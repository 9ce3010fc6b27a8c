"""Pure-numpy pairwise-distance kernels; fallback for the compiled module."""

from __future__ import annotations

import numpy as np


def pairwise_euclidean(X: np.ndarray) -> np.ndarray:
    sq = np.einsum("ij,ij->i", X, X)
    D2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(D2, 0.0, out=D2)
    D = np.sqrt(D2)
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    return D


def pairwise_manhattan(X: np.ndarray) -> np.ndarray:
    D = np.abs(X[:, None, :] - X[None, :, :]).sum(axis=2)
    np.fill_diagonal(D, 0.0)
    return D


def pairwise_cosine(X: np.ndarray) -> np.ndarray:
    # Caller guarantees no zero-norm row.
    norms = np.linalg.norm(X, axis=1)
    D = 1.0 - (X @ X.T) / np.outer(norms, norms)
    np.maximum(D, 0.0, out=D)
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    return D


def cross_euclidean(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    sa = np.einsum("ij,ij->i", A, A)
    sb = np.einsum("ij,ij->i", B, B)
    D2 = sa[:, None] + sb[None, :] - 2.0 * (A @ B.T)
    np.maximum(D2, 0.0, out=D2)
    return np.sqrt(D2)


def cross_manhattan(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.abs(A[:, None, :] - B[None, :, :]).sum(axis=2)


def cross_cosine(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    na = np.linalg.norm(A, axis=1)
    nb = np.linalg.norm(B, axis=1)
    D = 1.0 - (A @ B.T) / np.outer(na, nb)
    np.maximum(D, 0.0, out=D)
    return D
