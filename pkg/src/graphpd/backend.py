"""Distance-kernel backend selection.

The compiled extension is preferred when importable; set GRAPHPD_PURE_PYTHON=1
to force the numpy fallback. Both backends implement the same contracts;
results may differ at the level of floating-point rounding.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import DataError
from . import _puredist

if os.environ.get("GRAPHPD_PURE_PYTHON"):
    _impl = _puredist
    BACKEND = "pure"
else:
    try:
        from . import _fastdist as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _puredist
        BACKEND = "pure"

DISTANCES = ("euclidean", "cosine", "manhattan")


def _as_c_f64(X) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(X, dtype=np.float64))


def _check_cosine_norms(X: np.ndarray, what: str) -> None:
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.argmin(norms))
        raise DataError("degenerate-vector", f"{what} row {bad} has zero norm under cosine distance")


def pairwise_distances(X, kind: str) -> np.ndarray:
    """Symmetric n x n distance matrix with zero diagonal."""
    X = _as_c_f64(X)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DataError("too-few-points", "need a 2-D matrix with at least 2 rows")
    if kind == "euclidean":
        return _impl.pairwise_euclidean(X)
    if kind == "manhattan":
        return _impl.pairwise_manhattan(X)
    if kind == "cosine":
        _check_cosine_norms(X, "feature")
        return _impl.pairwise_cosine(X)
    raise DataError("unknown-distance", f"unknown distance measure {kind!r}")


def cross_distances(A, B, kind: str) -> np.ndarray:
    """(len(A), len(B)) distance matrix between two point sets."""
    A = _as_c_f64(A)
    B = _as_c_f64(B)
    if kind == "euclidean":
        return _impl.cross_euclidean(A, B)
    if kind == "manhattan":
        return _impl.cross_manhattan(A, B)
    if kind == "cosine":
        _check_cosine_norms(A, "query")
        _check_cosine_norms(B, "reference")
        return _impl.cross_cosine(A, B)
    raise DataError("unknown-distance", f"unknown distance measure {kind!r}")
