import math

import numpy as np
import pytest

from graphpd import gcn
from graphpd.errors import TrainingError
from graphpd.graph import build_graph_from_features


def path_graph(n):
    A = np.zeros((n, n))
    for i in range(n - 1):
        A[i, i + 1] = A[i + 1, i] = 1.0
    return A


def random_instance(rng, n=6, m=4, L=2, width=3):
    A = (rng.random((n, n)) < 0.4).astype(float)
    A = np.triu(A, 1)
    A = A + A.T
    A_hat = gcn.normalize_adjacency(A)
    X = rng.normal(size=(n, m))
    labels = rng.integers(0, 2, size=n)
    labels[0], labels[1] = 0, 1  # both classes present
    mask = rng.random(n) < 0.6
    mask[:2] = True
    model = gcn.init_model(m, width, L, seed=int(rng.integers(0, 2**31)))
    return model, A_hat, X, labels, mask


def finite_difference_grads(model, A_hat, X, labels, mask, wd, eps=1e-5):
    grads = []
    for p in model.parameters():
        g = np.zeros_like(p)
        flat = p.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            lp, _ = gcn.loss_and_gradients(model, A_hat, X, labels, mask, wd)
            flat[i] = orig - eps
            lm, _ = gcn.loss_and_gradients(model, A_hat, X, labels, mask, wd)
            flat[i] = orig
            g.ravel()[i] = (lp - lm) / (2 * eps)
        grads.append(g)
    return grads


def max_rel_error(analytic, numeric):
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.abs(a) + np.abs(n), 1e-8)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


# --- normalize_adjacency ---


def test_normalize_isolated_nodes():
    np.testing.assert_allclose(gcn.normalize_adjacency(np.zeros((4, 4))), np.eye(4))


def test_normalize_single_edge():
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(gcn.normalize_adjacency(A), np.full((2, 2), 0.5))


def test_normalize_elementwise_formula():
    rng = np.random.default_rng(0)
    A = (rng.random((6, 6)) < 0.5).astype(float)
    A = np.triu(A, 1)
    A = A + A.T
    A_hat = gcn.normalize_adjacency(A)
    AI = A + np.eye(6)
    deg = AI.sum(axis=1)
    for i in range(6):
        for j in range(6):
            assert A_hat[i, j] == pytest.approx(AI[i, j] / math.sqrt(deg[i] * deg[j]), abs=1e-15)


def test_spectral_radius_at_most_one():
    rng = np.random.default_rng(1)
    for _ in range(5):
        n = int(rng.integers(3, 9))
        A = (rng.random((n, n)) < 0.4).astype(float)
        A = np.triu(A, 1)
        A = A + A.T
        A_hat = gcn.normalize_adjacency(A)
        v = rng.normal(size=n)
        for _ in range(500):  # power iteration
            w = A_hat @ v
            v = w / np.linalg.norm(w)
        radius = abs(v @ A_hat @ v)
        assert radius <= 1.0 + 1e-8


# --- forward ---


def test_forward_identity_plumbing():
    m = 3
    model = gcn.GcnModel(
        layer_weights=[np.eye(m)],
        head_weight=np.eye(m)[:, :2],
        head_bias=np.zeros(2),
    )
    X = np.abs(np.random.default_rng(2).normal(size=(5, m)))
    logits, probs = gcn.forward(model, np.eye(5), X)
    np.testing.assert_allclose(logits, X[:, :2])


def test_softmax_rows_sum_to_one():
    rng = np.random.default_rng(3)
    model = gcn.init_model(4, 3, 2, seed=0)
    A_hat = gcn.normalize_adjacency(path_graph(6))
    _, probs = gcn.forward(model, A_hat, rng.normal(size=(6, 4)) * 50)
    np.testing.assert_allclose(probs.sum(axis=1), np.ones(6), atol=1e-12)
    assert np.all(probs >= 0) and np.all(probs <= 1)


def test_forward_matches_straight_line_reimplementation():
    rng = np.random.default_rng(4)
    n, m, width = 4, 3, 5
    model = gcn.init_model(m, width, 2, seed=7)
    A_hat = gcn.normalize_adjacency(path_graph(n))
    X = rng.normal(size=(n, m))
    logits, _ = gcn.forward(model, A_hat, X)

    # independent re-implementation of the matrix chain
    H = X
    for W in model.layer_weights:
        Z = np.zeros((n, W.shape[1]))
        for i in range(n):
            for j in range(W.shape[1]):
                s = 0.0
                for t in range(n):
                    for u in range(H.shape[1]):
                        s += A_hat[i, t] * H[t, u] * W[u, j]
                Z[i, j] = max(s, 0.0)
        H = Z
    expected = H @ model.head_weight + model.head_bias
    np.testing.assert_allclose(logits, expected, atol=1e-10)


def test_permutation_equivariance():
    rng = np.random.default_rng(5)
    n, m = 7, 4
    A = (rng.random((n, n)) < 0.4).astype(float)
    A = np.triu(A, 1)
    A = A + A.T
    X = rng.normal(size=(n, m))
    model = gcn.init_model(m, 3, 2, seed=1)
    perm = rng.permutation(n)
    P = np.eye(n)[perm]
    logits1, _ = gcn.forward(model, gcn.normalize_adjacency(A), X)
    logits2, _ = gcn.forward(model, gcn.normalize_adjacency(P @ A @ P.T), P @ X)
    np.testing.assert_allclose(logits2, P @ logits1, atol=1e-10)


def test_isolated_node_locality():
    rng = np.random.default_rng(6)
    n, m = 5, 3
    A_hat = gcn.normalize_adjacency(np.zeros((n, n)))  # identity
    X = rng.normal(size=(n, m))
    model = gcn.init_model(m, 4, 2, seed=2)
    logits1, _ = gcn.forward(model, A_hat, X)
    X2 = X.copy()
    X2[2] += 10.0
    logits2, _ = gcn.forward(model, A_hat, X2)
    others = [i for i in range(n) if i != 2]
    np.testing.assert_allclose(logits2[others], logits1[others], atol=1e-12)


# --- loss and gradients ---


def test_uniform_softmax_loss_is_ln2():
    n, m = 6, 3
    model = gcn.GcnModel(layer_weights=[], head_weight=np.zeros((m, 2)), head_bias=np.zeros(2))
    X = np.random.default_rng(7).normal(size=(n, m))
    labels = np.array([0, 1, 0, 1, 0, 1])
    mask = np.array([True, True, True, False, False, False])
    loss, _ = gcn.loss_and_gradients(model, np.eye(n), X, labels, mask, 0.0)
    assert loss == pytest.approx(math.log(2.0), rel=1e-12)


def test_empty_mask_rejected():
    model = gcn.init_model(2, 2, 1, seed=0)
    with pytest.raises(TrainingError) as exc:
        gcn.loss_and_gradients(model, np.eye(3), np.zeros((3, 2)), np.zeros(3, dtype=int), np.zeros(3, dtype=bool))
    assert exc.value.code == "empty-mask"


def test_single_class_mask_warns():
    model = gcn.init_model(2, 2, 0, seed=0)
    labels = np.array([0, 0, 1])
    mask = np.array([True, True, False])
    with pytest.warns(RuntimeWarning):
        gcn.loss_and_gradients(model, np.eye(3), np.ones((3, 2)), labels, mask)


@pytest.mark.parametrize("L", [1, 2, 3])
@pytest.mark.parametrize("wd", [0.0, 5e-4])
def test_gradients_match_finite_differences(L, wd):
    rng = np.random.default_rng(100 + L)
    model, A_hat, X, labels, mask = random_instance(rng, n=6, m=4, L=L)
    _, grads = gcn.loss_and_gradients(model, A_hat, X, labels, mask, wd)
    numeric = finite_difference_grads(model, A_hat, X, labels, mask, wd)
    assert max_rel_error(grads.parameters(), numeric) < 1e-4


# --- training ---


def test_zero_learning_rate_is_noop():
    rng = np.random.default_rng(8)
    model, A_hat, X, labels, mask = random_instance(rng)
    val_mask = ~mask
    speakers = np.array([f"s{i}" for i in range(len(X))])
    cfg = gcn.TrainConfig(learning_rate=0.0, max_epochs=10, patience=5, hidden_width=3, seed=0)
    trained, history = gcn.train(model, A_hat, X, labels, speakers, mask, val_mask, cfg)
    for p0, p1 in zip(model.parameters(), trained.parameters()):
        np.testing.assert_array_equal(p0, p1)
    assert len(set(history["train_loss"])) == 1


def test_training_is_deterministic():
    rng = np.random.default_rng(9)
    model, A_hat, X, labels, mask = random_instance(rng)
    speakers = np.array([f"s{i}" for i in range(len(X))])
    cfg = gcn.TrainConfig(learning_rate=1e-2, max_epochs=30, patience=10, hidden_width=3, seed=5)
    out = []
    for _ in range(2):
        trained, history = gcn.train(model, A_hat, X, labels, speakers, mask, ~mask, cfg)
        out.append((trained, history))
    for p0, p1 in zip(out[0][0].parameters(), out[1][0].parameters()):
        np.testing.assert_array_equal(p0, p1)
    assert out[0][1]["train_loss"] == out[1][1]["train_loss"]


def test_train_separable_clusters():
    rng = np.random.default_rng(10)
    n_per = 20
    X = np.vstack([rng.normal(size=(n_per, 3)) + 6.0, rng.normal(size=(n_per, 3)) - 6.0])
    labels = np.array([0] * n_per + [1] * n_per)
    speakers = np.array([f"s{i % 8}_{labels[i]}" for i in range(2 * n_per)])
    adj = build_graph_from_features(X, "euclidean", 3)
    A_hat = gcn.normalize_adjacency(adj)
    mask = np.arange(2 * n_per) % 4 != 0
    val_mask = ~mask
    cfg = gcn.TrainConfig(learning_rate=1e-2, max_epochs=200, patience=50, hidden_width=8, seed=3)
    model = gcn.init_model(3, 8, 2, seed=3)
    trained, _ = gcn.train(model, A_hat, X, labels, speakers, mask, val_mask, cfg)
    _, probs = gcn.forward(trained, A_hat, X)
    train_acc = (probs.argmax(axis=1) == labels)[mask].mean()
    assert train_acc >= 0.99


def test_checkpoint_round_trip(tmp_path):
    model = gcn.init_model(5, 4, 2, seed=11)
    path = tmp_path / "model.ckpt"
    gcn.save_checkpoint(model, path, meta={"note": "test"})
    loaded = gcn.load_checkpoint(path)
    assert loaded.n_layers == model.n_layers
    for p0, p1 in zip(model.parameters(), loaded.parameters()):
        np.testing.assert_array_equal(p0, p1)
