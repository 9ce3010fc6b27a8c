"""FC and KNN baselines.

The FC baseline is literally the GCN head with zero propagation layers
(A_hat = I, L = 0), trained with the same optimizer and early-stopping
contract. KNN emits class-fraction probabilities so speaker-level soft
voting applies uniformly across models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gcn
from .backend import cross_distances
from .errors import DataError

KNN_K_GRID = (1, 2, 3, 5, 7, 10)


@dataclass
class FcModel:
    weight: np.ndarray  # (m, 2)
    bias: np.ndarray  # (2,)

    def predict_probs(self, X: np.ndarray) -> np.ndarray:
        return gcn._softmax(X @ self.weight + self.bias)


@dataclass(frozen=True)
class KnnConfig:
    k: int
    distance: str = "cosine"

    def __post_init__(self):
        if self.k < 1:
            raise DataError("bad-config", f"k must be >= 1, got {self.k}")


def fc_train(
    X: np.ndarray,
    labels: np.ndarray,
    speaker_ids,
    train_mask: np.ndarray,
    val_mask: np.ndarray,
    cfg: gcn.TrainConfig,
) -> FcModel:
    """Linear layer + softmax + cross-entropy, sharing the GCN train loop."""
    n, m = X.shape
    model = gcn.init_model(m, cfg.hidden_width, n_layers=0, seed=cfg.seed)
    identity = np.eye(n)
    trained, _ = gcn.train(model, identity, X, labels, speaker_ids, train_mask, val_mask, cfg)
    return FcModel(weight=trained.head_weight, bias=trained.head_bias)


def knn_predict(
    train_X: np.ndarray,
    train_labels: np.ndarray,
    query_X: np.ndarray,
    cfg: KnnConfig,
) -> np.ndarray:
    """(q, 2) class-fraction probabilities from the k nearest training rows.

    Distance ties break by ascending training-row index (stable argsort).
    """
    train_X = np.asarray(train_X, dtype=np.float64)
    train_labels = np.asarray(train_labels, dtype=np.int64)
    if cfg.k > train_X.shape[0]:
        raise DataError("k-too-large", f"k={cfg.k} exceeds {train_X.shape[0]} training rows")
    D = cross_distances(query_X, train_X, cfg.distance)
    order = np.argsort(D, axis=1, kind="stable")[:, : cfg.k]
    neighbor_labels = train_labels[order]
    probs = np.empty((len(query_X), 2))
    probs[:, 1] = neighbor_labels.mean(axis=1)
    probs[:, 0] = 1.0 - probs[:, 1]
    return probs
