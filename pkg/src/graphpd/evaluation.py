"""Stratified speaker-independent cross-validation, grid search, soft voting,
and replicate aggregation.

Per replicate, each class's speakers are shuffled and cut into 10 blocks;
fold f tests on block f, validates on block (f+1) mod 10, trains on the rest,
so every speaker is tested exactly once. The graph is transductive: it is
built over all segments, but only train-mask labels reach the optimizer and
only val-mask labels reach model selection.
"""

from __future__ import annotations

import json
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import gcn
from .baselines import KnnConfig, knn_predict
from .dataset import SegmentRecord, feature_matrix
from .errors import DataError
from .graph import build_graph_from_features

N_FOLDS = 10
N_REPLICATES = 5

FC_LR_GRID = (1e-3, 1e-2)
GCN_LR_GRID = (1e-3, 1e-4)
K_GRID = (1, 2, 3, 5, 7, 10)
L_GRID = (2, 3, 4, 5)
ALL_DISTANCES = ("euclidean", "cosine", "manhattan")


@dataclass(frozen=True)
class FoldAssignment:
    train_speakers: tuple[str, ...]
    val_speakers: tuple[str, ...]
    test_speakers: tuple[str, ...]


@dataclass(frozen=True)
class CvPlan:
    replicate_seed: int
    folds: tuple[FoldAssignment, ...]


@dataclass(frozen=True)
class GridSpec:
    """Hyperparameter grid; cells iterate lexicographically (lr, k, L, distance)."""

    model: str  # fc | knn | gcn
    learning_rates: tuple[float, ...] = ()
    k_values: tuple[int, ...] = ()
    depths: tuple[int, ...] = ()
    distances: tuple[str, ...] = ()

    @staticmethod
    def default_for(model: str, distances: tuple[str, ...] = ALL_DISTANCES) -> "GridSpec":
        if model == "fc":
            return GridSpec(model="fc", learning_rates=FC_LR_GRID)
        if model == "knn":
            return GridSpec(model="knn", k_values=K_GRID, distances=distances)
        if model == "gcn":
            return GridSpec(model="gcn", learning_rates=GCN_LR_GRID, k_values=K_GRID, depths=L_GRID, distances=distances)
        raise DataError("unknown-model", f"unknown model kind {model!r}")

    def cells(self) -> list[dict]:
        lrs = self.learning_rates or (None,)
        ks = self.k_values or (None,)
        Ls = self.depths or (None,)
        dists = self.distances or (None,)
        out = []
        for lr in lrs:
            for k in ks:
                for L in Ls:
                    for dist in dists:
                        cell = {}
                        if lr is not None:
                            cell["lr"] = lr
                        if k is not None:
                            cell["k"] = k
                        if L is not None:
                            cell["L"] = L
                        if dist is not None:
                            cell["distance"] = dist
                        out.append(cell)
        return out


@dataclass
class FoldResult:
    replicate: int
    fold: int
    selected: dict
    val_accuracy: float
    test_accuracy: float
    test_speakers: dict = field(default_factory=dict)


@dataclass
class ExperimentReport:
    model: str
    folds: list[FoldResult]
    replicate_scores: list[float]
    mean: float
    std: float


def make_cv_plans(table, replicates: int = N_REPLICATES, seed: int = 0) -> list[CvPlan]:
    """Class-stratified rotation plans; deterministic per seed."""
    per_class = {label: sorted(table.speakers_of_class(label)) for label in (0, 1)}
    for label, speakers in per_class.items():
        if len(speakers) < N_FOLDS:
            raise DataError(
                "too-few-speakers",
                f"class {label} has {len(speakers)} speakers; stratified {N_FOLDS}-fold needs >= {N_FOLDS}",
            )
    plans = []
    children = np.random.SeedSequence(seed).spawn(replicates)
    for child in children:
        rep_seed = int(child.generate_state(1)[0])
        rng = np.random.default_rng(rep_seed)
        blocks: dict[int, list[list[str]]] = {}
        for label, speakers in per_class.items():
            shuffled = list(np.array(speakers)[rng.permutation(len(speakers))])
            blocks[label] = [list(b) for b in np.array_split(shuffled, N_FOLDS)]
        folds = []
        for f in range(N_FOLDS):
            test, val, train = [], [], []
            for label in (0, 1):
                for b, block in enumerate(blocks[label]):
                    if b == f:
                        test += block
                    elif b == (f + 1) % N_FOLDS:
                        val += block
                    else:
                        train += block
            folds.append(
                FoldAssignment(
                    train_speakers=tuple(sorted(train)),
                    val_speakers=tuple(sorted(val)),
                    test_speakers=tuple(sorted(test)),
                )
            )
        plans.append(CvPlan(replicate_seed=rep_seed, folds=tuple(folds)))
    return plans


def soft_vote(segment_probs: np.ndarray, speaker_ids) -> dict[str, tuple[int, np.ndarray]]:
    """Average each speaker's segment probability vectors; argmax predicts.

    An exact tie predicts class 0 (argmax takes the first maximum).
    """
    segment_probs = np.asarray(segment_probs)
    groups: dict[str, list[int]] = {}
    for i, spk in enumerate(speaker_ids):
        groups.setdefault(spk, []).append(i)
    out = {}
    for spk, idx in groups.items():
        mean = segment_probs[idx].mean(axis=0)
        out[spk] = (int(np.argmax(mean)), mean)
    return out


def _masks_for_fold(speaker_ids: np.ndarray, fold: FoldAssignment):
    train_set, val_set, test_set = map(set, (fold.train_speakers, fold.val_speakers, fold.test_speakers))
    train = np.array([s in train_set for s in speaker_ids])
    val = np.array([s in val_set for s in speaker_ids])
    test = np.array([s in test_set for s in speaker_ids])
    return train, val, test


def _speaker_truth(labels: np.ndarray, speaker_ids: np.ndarray, mask: np.ndarray) -> dict[str, int]:
    return {speaker_ids[i]: int(labels[i]) for i in np.flatnonzero(mask)}


def _vote_accuracy(probs: np.ndarray, labels, speaker_ids, mask) -> tuple[float, dict]:
    idx = np.flatnonzero(mask)
    votes = soft_vote(probs[idx], [speaker_ids[i] for i in idx])
    truth = _speaker_truth(labels, speaker_ids, mask)
    correct = sum(1 for spk, (pred, _) in votes.items() if pred == truth[spk])
    detail = {
        spk: {"true": truth[spk], "pred": pred, "mean_probs": [float(p) for p in mean]}
        for spk, (pred, mean) in sorted(votes.items())
    }
    return 100.0 * correct / len(votes), detail


def _cell_seed(base_seed: int, replicate: int, fold: int, cell_idx: int) -> int:
    return int(np.random.SeedSequence([base_seed, replicate, fold, cell_idx]).generate_state(1)[0])


class _GraphCache:
    """Normalized propagation matrices keyed by (distance, k); thread-safe
    because entries are computed before any concurrent use."""

    def __init__(self, X: np.ndarray):
        self.X = X
        self._store: dict[tuple[str, int], np.ndarray] = {}

    def a_hat(self, distance: str, k: int) -> np.ndarray:
        key = (distance, k)
        if key not in self._store:
            adj = build_graph_from_features(self.X, distance, k)
            self._store[key] = gcn.normalize_adjacency(adj)
        return self._store[key]

    def prefill(self, cells: list[dict]) -> None:
        for cell in cells:
            if "k" in cell and "distance" in cell:
                self.a_hat(cell["distance"], cell["k"])


def _run_fold(
    model_kind: str,
    X: np.ndarray,
    labels: np.ndarray,
    speaker_ids: np.ndarray,
    fold: FoldAssignment,
    cells: list[dict],
    cache: _GraphCache,
    base_cfg: gcn.TrainConfig,
    replicate: int,
    fold_idx: int,
) -> FoldResult:
    train_mask, val_mask, test_mask = _masks_for_fold(speaker_ids, fold)
    best = None  # (val_acc, cell_idx, test_probs)
    for cell_idx, cell in enumerate(cells):
        seed = _cell_seed(base_cfg.seed, replicate, fold_idx, cell_idx)
        if model_kind == "knn":
            knn_cfg = KnnConfig(k=cell["k"], distance=cell.get("distance", "cosine"))
            if knn_cfg.k > int(train_mask.sum()):
                raise DataError("k-too-large", f"knn k={knn_cfg.k} exceeds training segments")
            val_probs = knn_predict(X[train_mask], labels[train_mask], X[val_mask], knn_cfg)
            full = np.zeros((len(X), 2))
            full[val_mask] = val_probs
            val_acc, _ = _vote_accuracy(full, labels, speaker_ids, val_mask)
            test_probs = np.zeros((len(X), 2))
            test_probs[test_mask] = knn_predict(X[train_mask], labels[train_mask], X[test_mask], knn_cfg)
        else:
            cfg = gcn.TrainConfig(
                learning_rate=cell.get("lr", base_cfg.learning_rate),
                max_epochs=base_cfg.max_epochs,
                patience=base_cfg.patience,
                hidden_width=base_cfg.hidden_width,
                seed=seed,
                weight_decay=base_cfg.weight_decay,
            )
            if model_kind == "fc":
                a_hat = np.eye(len(X))
                depth = 0
            elif model_kind == "gcn":
                a_hat = cache.a_hat(cell["distance"], cell["k"])
                depth = cell["L"]
            else:
                raise DataError("unknown-model", f"unknown model kind {model_kind!r}")
            model = gcn.init_model(X.shape[1], cfg.hidden_width, depth, seed)
            trained, _hist = gcn.train(model, a_hat, X, labels, speaker_ids, train_mask, val_mask, cfg)
            _, probs = gcn.forward(trained, a_hat, X)
            val_acc, _ = _vote_accuracy(probs, labels, speaker_ids, val_mask)
            test_probs = probs
        if best is None or val_acc > best[0]:
            best = (val_acc, cell_idx, test_probs)

    val_acc, cell_idx, test_probs = best
    test_acc, detail = _vote_accuracy(test_probs, labels, speaker_ids, test_mask)
    return FoldResult(
        replicate=replicate,
        fold=fold_idx,
        selected=cells[cell_idx],
        val_accuracy=val_acc,
        test_accuracy=test_acc,
        test_speakers=detail,
    )


def run_experiment(
    records: list[SegmentRecord],
    model_kind: str,
    grid: GridSpec,
    plans: list[CvPlan],
    base_cfg: gcn.TrainConfig | None = None,
    jobs: int = 1,
) -> ExperimentReport:
    """Grid-search on validation, report test speaker accuracy, aggregate
    mean +/- std over replicate scores (a replicate scores the mean of its
    folds)."""
    base_cfg = base_cfg or gcn.TrainConfig()
    X = feature_matrix(records)
    labels = np.array([r.label for r in records], dtype=np.int64)
    speaker_ids = np.array([r.speaker_id for r in records])
    cells = grid.cells()
    if not cells:
        raise DataError("empty-grid", "grid has no cells")
    cache = _GraphCache(X)
    if model_kind == "gcn":
        cache.prefill(cells)  # computed up-front so fold workers only read

    tasks = [(ri, fi, fold) for ri, plan in enumerate(plans) for fi, fold in enumerate(plan.folds)]

    def run_one(task):
        ri, fi, fold = task
        return _run_fold(model_kind, X, labels, speaker_ids, fold, cells, cache, base_cfg, ri, fi)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_one, tasks))
    else:
        results = [run_one(t) for t in tasks]

    replicate_scores = []
    for ri in range(len(plans)):
        fold_accs = [r.test_accuracy for r in results if r.replicate == ri]
        replicate_scores.append(float(np.mean(fold_accs)))
    mean = float(np.mean(replicate_scores))
    std = float(np.std(replicate_scores, ddof=1)) if len(replicate_scores) > 1 else 0.0
    return ExperimentReport(
        model=model_kind, folds=results, replicate_scores=replicate_scores, mean=mean, std=std
    )


def sweep(
    records: list[SegmentRecord],
    plans: list[CvPlan],
    axis: str,
    values: tuple,
    fixed: dict[str, dict],
    model_kind: str = "gcn",
    base_cfg: gcn.TrainConfig | None = None,
    jobs: int = 1,
) -> list[dict]:
    """One CV experiment per (distance, swept value); everything else fixed.

    ``fixed`` maps distance -> {"lr": .., "k": ..} (axis "L") or
    {"lr": .., "L": ..} (axis "k"). Returns rows with mean/std per point.
    """
    if axis not in ("k", "L"):
        raise DataError("bad-axis", f"axis must be 'k' or 'L', got {axis!r}")
    rows = []
    for distance, params in fixed.items():
        for value in values:
            cell_kwargs = dict(
                learning_rates=(params["lr"],),
                distances=(distance,),
                k_values=(value,) if axis == "k" else (params["k"],),
                depths=(params["L"],) if axis == "k" else (value,),
            )
            grid = GridSpec(model=model_kind, **cell_kwargs)
            report = run_experiment(records, model_kind, grid, plans, base_cfg, jobs=jobs)
            rows.append({"distance": distance, axis: value, "mean": report.mean, "std": report.std})
    return rows


def _modal_selected(report: ExperimentReport, key: str) -> str:
    values = [fold.selected[key] for fold in report.folds if key in fold.selected]
    if not values:
        return "-"
    return str(Counter(values).most_common(1)[0][0])


def report_to_dict(report: ExperimentReport) -> dict:
    return {
        "model": report.model,
        "mean": report.mean,
        "std": report.std,
        "replicate_scores": report.replicate_scores,
        "folds": [
            {
                "replicate": f.replicate,
                "fold": f.fold,
                "selected": f.selected,
                "val_accuracy": f.val_accuracy,
                "test_accuracy": f.test_accuracy,
                "test_speakers": f.test_speakers,
            }
            for f in report.folds
        ],
    }


def write_report_json(report: ExperimentReport, path) -> None:
    Path(path).write_text(json.dumps(report_to_dict(report), sort_keys=True, indent=2) + "\n", encoding="utf-8")


def write_report_tsv(report: ExperimentReport, path) -> None:
    """Flat summary; hyperparameter columns show the most-selected value."""
    header = "model\tdistance\tk\tL\tmean\tstd"
    row = "\t".join(
        [
            report.model,
            _modal_selected(report, "distance"),
            _modal_selected(report, "k"),
            _modal_selected(report, "L"),
            f"{report.mean:.6f}",
            f"{report.std:.6f}",
        ]
    )
    Path(path).write_text(header + "\n" + row + "\n", encoding="utf-8")


def write_sweep_tsv(rows: list[dict], axis: str, path) -> None:
    header = f"distance\t{axis}\tmean\tstd"
    lines = [header]
    for r in rows:
        lines.append(f"{r['distance']}\t{r[axis]}\t{r['mean']:.6f}\t{r['std']:.6f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
