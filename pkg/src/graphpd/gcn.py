"""From-scratch GCN: normalized propagation, forward pass, reverse-mode
gradients, and a full-batch Adam loop with early stopping on speaker-level
validation accuracy.

Layer update: X_{l+1} = ReLU(A_hat X_l W_l), A_hat = D^{-1/2}(A+I)D^{-1/2}.
The head is a linear layer + softmax over 2 classes. L = 0 degenerates to a
plain linear classifier on the raw features (the FC baseline).
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError, TrainingError
from .graph import AdjacencyMatrix

N_CLASSES = 2


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    max_epochs: int = 300
    patience: int = 30
    hidden_width: int = 64
    seed: int = 0
    weight_decay: float = 5e-4

    def __post_init__(self):
        if self.learning_rate < 0 or self.max_epochs < 1 or self.patience < 1:
            raise DataError("bad-config", "learning_rate >= 0, max_epochs/patience >= 1 required")
        if self.hidden_width < 1 or self.weight_decay < 0:
            raise DataError("bad-config", "hidden_width >= 1, weight_decay >= 0 required")


@dataclass
class GcnModel:
    layer_weights: list[np.ndarray]
    head_weight: np.ndarray
    head_bias: np.ndarray

    @property
    def n_layers(self) -> int:
        return len(self.layer_weights)

    @property
    def input_dim(self) -> int:
        return self.layer_weights[0].shape[0] if self.layer_weights else self.head_weight.shape[0]

    def parameters(self) -> list[np.ndarray]:
        return [*self.layer_weights, self.head_weight, self.head_bias]

    def copy(self) -> "GcnModel":
        return GcnModel(
            layer_weights=[W.copy() for W in self.layer_weights],
            head_weight=self.head_weight.copy(),
            head_bias=self.head_bias.copy(),
        )


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_model(input_dim: int, hidden_width: int, n_layers: int, seed: int) -> GcnModel:
    """Seeded Glorot-uniform weights, zero head bias. Uniform hidden width."""
    if n_layers < 0:
        raise DataError("bad-config", "n_layers must be >= 0")
    rng = np.random.default_rng(seed)
    dims = [input_dim] + [hidden_width] * n_layers
    weights = [_glorot(rng, dims[i], dims[i + 1]) for i in range(n_layers)]
    head_weight = _glorot(rng, dims[-1], N_CLASSES)
    return GcnModel(layer_weights=weights, head_weight=head_weight, head_bias=np.zeros(N_CLASSES))


def normalize_adjacency(A: AdjacencyMatrix | np.ndarray) -> np.ndarray:
    """Symmetric renormalization with self-loops: D^{-1/2}(A+I)D^{-1/2}."""
    dense = A.to_dense() if isinstance(A, AdjacencyMatrix) else np.asarray(A, dtype=np.float64)
    AI = dense + np.eye(dense.shape[0])
    inv_sqrt_deg = 1.0 / np.sqrt(AI.sum(axis=1))
    return AI * np.outer(inv_sqrt_deg, inv_sqrt_deg)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward(model: GcnModel, A_hat: np.ndarray, X: np.ndarray):
    """Returns (logits, probs); probs rows sum to 1."""
    logits, probs, _ = _forward_cached(model, A_hat, X)
    return logits, probs


def _forward_cached(model: GcnModel, A_hat: np.ndarray, X: np.ndarray):
    if X.shape[1] != model.input_dim:
        raise DataError("shape-mismatch", f"features have dim {X.shape[1]}, model expects {model.input_dim}")
    H = X
    pre_acts = []  # A_hat H_l W_l before ReLU, needed for backprop
    hidden = [H]
    for W in model.layer_weights:
        Z = A_hat @ H @ W
        pre_acts.append(Z)
        H = np.maximum(Z, 0.0)
        hidden.append(H)
    logits = H @ model.head_weight + model.head_bias
    return logits, _softmax(logits), (hidden, pre_acts)


def loss_and_gradients(
    model: GcnModel,
    A_hat: np.ndarray,
    X: np.ndarray,
    labels: np.ndarray,
    train_mask: np.ndarray,
    weight_decay: float = 0.0,
):
    """Mean cross-entropy over masked nodes + L2 penalty; exact gradients.

    Returns (loss, grads) with grads shaped like (layer_weights, head_weight,
    head_bias).
    """
    mask = np.asarray(train_mask, dtype=bool)
    n_masked = int(mask.sum())
    if n_masked == 0:
        raise TrainingError("empty-mask", "train mask selects no nodes")
    y = np.asarray(labels, dtype=np.int64)
    if len(np.unique(y[mask])) < 2:
        warnings.warn("train mask contains a single class; training is degenerate", RuntimeWarning)

    logits, probs, (hidden, pre_acts) = _forward_cached(model, A_hat, X)

    # loss via log-sum-exp for stability
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    ce = -log_probs[mask, y[mask]].mean()
    penalty = 0.5 * weight_decay * sum(float(np.sum(W * W)) for W in [*model.layer_weights, model.head_weight])
    loss = float(ce + penalty)

    # backprop
    dlogits = probs.copy()
    dlogits[np.arange(len(y)), y] -= 1.0
    dlogits[~mask] = 0.0
    dlogits /= n_masked

    H_last = hidden[-1]
    d_head_w = H_last.T @ dlogits + weight_decay * model.head_weight
    d_head_b = dlogits.sum(axis=0)
    dH = dlogits @ model.head_weight.T
    d_weights: list[np.ndarray] = [None] * model.n_layers  # type: ignore[list-item]
    for l in range(model.n_layers - 1, -1, -1):
        dZ = dH * (pre_acts[l] > 0.0)
        AH = A_hat @ hidden[l]
        d_weights[l] = AH.T @ dZ + weight_decay * model.layer_weights[l]
        if l > 0:
            dH = (A_hat @ dZ) @ model.layer_weights[l].T  # A_hat symmetric
    grads = GcnModel(layer_weights=d_weights, head_weight=d_head_w, head_bias=d_head_b)
    return loss, grads


class Adam:
    """Standard Adam; state order fixed, so updates are deterministic."""

    def __init__(self, params: list[np.ndarray], lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1**self.t)
            v_hat = v / (1 - b2**self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def speaker_accuracy(
    probs: np.ndarray,
    labels: np.ndarray,
    speaker_ids: np.ndarray,
    mask: np.ndarray,
) -> float:
    """Soft-voted speaker-level accuracy over the masked nodes (0..100)."""
    from .evaluation import soft_vote  # local import avoids a cycle

    mask = np.asarray(mask, dtype=bool)
    idx = np.flatnonzero(mask)
    if len(idx) == 0:
        raise TrainingError("empty-mask", "mask selects no nodes")
    votes = soft_vote(probs[idx], [speaker_ids[i] for i in idx])
    truth = {}
    for i in idx:
        truth[speaker_ids[i]] = int(labels[i])
    correct = sum(1 for spk, (pred, _) in votes.items() if pred == truth[spk])
    return 100.0 * correct / len(votes)


def train(
    model: GcnModel,
    A_hat: np.ndarray,
    X: np.ndarray,
    labels: np.ndarray,
    speaker_ids,
    train_mask: np.ndarray,
    val_mask: np.ndarray,
    cfg: TrainConfig,
):
    """Full-batch Adam; keeps the snapshot with best validation speaker
    accuracy. Accuracy ties resolve by lower validation cross-entropy, then
    earliest epoch, so a lucky early epoch on a tiny validation set cannot
    freeze near-random weights. Returns (best model, history).

    Only train-mask labels drive gradients; val-mask labels are read solely
    for the early-stopping metric. Other labels are never read.
    """
    train_mask = np.asarray(train_mask, dtype=bool)
    val_mask = np.asarray(val_mask, dtype=bool)
    if np.any(train_mask & val_mask):
        raise TrainingError("mask-overlap", "train and val masks overlap")
    speaker_ids = np.asarray(speaker_ids)

    model = model.copy()
    opt = Adam(model.parameters(), lr=cfg.learning_rate)
    best = model.copy()
    best_key = (-1.0, -np.inf)  # (val accuracy, -val loss); larger is better
    epochs_since_best = 0
    history = {"train_loss": [], "val_accuracy": [], "val_loss": []}

    for _epoch in range(cfg.max_epochs):
        loss, grads = loss_and_gradients(model, A_hat, X, labels, train_mask, cfg.weight_decay)
        if not np.isfinite(loss):
            raise TrainingError("training-diverged", f"non-finite loss {loss}")
        opt.step(model.parameters(), grads.parameters())
        for p in model.parameters():
            if not np.all(np.isfinite(p)):
                raise TrainingError("training-diverged", "non-finite parameter after update")

        logits, probs = forward(model, A_hat, X)
        val_acc = speaker_accuracy(probs, labels, speaker_ids, val_mask)
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        val_loss = float(-log_probs[val_mask, labels[val_mask]].mean())
        history["train_loss"].append(loss)
        history["val_accuracy"].append(val_acc)
        history["val_loss"].append(val_loss)

        key = (val_acc, -val_loss)
        if key > best_key:
            best_key = key
            best = model.copy()
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best >= cfg.patience:
                break

    return best, history


def save_checkpoint(model: GcnModel, path, meta: dict | None = None) -> None:
    """JSON header + little-endian f64 payload; round-trip is exact."""
    shapes = [list(W.shape) for W in model.parameters()]
    header = {"shapes": shapes, "n_layers": model.n_layers, "meta": meta or {}}
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(struct.pack("<I", len(header_bytes)))
        f.write(header_bytes)
        for p in model.parameters():
            f.write(np.ascontiguousarray(p, dtype="<f8").tobytes())


def load_checkpoint(path) -> GcnModel:
    with open(path, "rb") as f:
        (hlen,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(hlen).decode("utf-8"))
        params = []
        for shape in header["shapes"]:
            count = int(np.prod(shape)) if shape else 1
            buf = f.read(count * 8)
            params.append(np.frombuffer(buf, dtype="<f8").reshape(shape).copy())
    n_layers = header["n_layers"]
    return GcnModel(layer_weights=params[:n_layers], head_weight=params[n_layers], head_bias=params[n_layers + 1])
