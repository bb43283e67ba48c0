"""Cross-validated evaluation with imbalance-aware folds and metrics.

Folds are stratified so each keeps the class ratio within one example.  AUC
comes from midranks (tie-aware Mann-Whitney), matching exhaustive pair
counting exactly.  Training inside each fold applies a class weight equal to
the fold's negative:positive ratio.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from hategraph.features import FeatureTable
from hategraph.graph import LabelSet, RetweetGraph
from hategraph.models.boosting import train_adaboost, train_gbt
from hategraph.models.sage import SageConfig, predict_sage, train_sage
from hategraph.util import fmt, write_delimited

logger = logging.getLogger(__name__)

MODEL_NAMES = ("sage", "adaboost", "gbt")
FEATURE_SETS = ("user+vec", "vec")


def stratified_kfold(y, k: int, seed: int = 0) -> np.ndarray:
    """Fold id per example, preserving class balance to within one example."""
    y = np.asarray(y)
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    rng = np.random.default_rng(seed)
    folds = np.full(len(y), -1, dtype=np.int64)
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        if len(idx) < k:
            raise ValueError(
                f"class {cls!r} has {len(idx)} examples, fewer than k={k}")
        idx = idx[rng.permutation(len(idx))]
        sizes = np.full(k, len(idx) // k, dtype=np.int64)
        sizes[:len(idx) % k] += 1
        start = 0
        for f in range(k):
            folds[idx[start:start + sizes[f]]] = f
            start += sizes[f]
    return folds


def auc_score(scores, y01) -> float:
    """Probability a positive outranks a negative, ties counting half."""
    scores = np.asarray(scores, dtype=np.float64)
    y = np.asarray(y01)
    n_pos = int(np.sum(y == 1))
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0  # midrank, 1-based
        i = j + 1
    pos_ranks = float(np.sum(ranks[y == 1]))
    return (pos_ranks - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def f1_accuracy(scores, y01, threshold: float = 0.5) -> tuple:
    """(f1, accuracy, f1_defined); F1 is 0 with the flag unset when no
    positive predictions or labels exist on either side."""
    scores = np.asarray(scores, dtype=np.float64)
    y = np.asarray(y01)
    pred = (scores >= threshold).astype(np.int64)
    tp = int(np.sum((pred == 1) & (y == 1)))
    fp = int(np.sum((pred == 1) & (y == 0)))
    fn = int(np.sum((pred == 0) & (y == 1)))
    acc = float(np.mean(pred == y))
    denom = 2 * tp + fp + fn
    if denom == 0:
        return 0.0, acc, False
    return 2.0 * tp / denom, acc, True


@dataclass
class FoldResult:
    fold: int
    auc: float
    f1: float
    accuracy: float


@dataclass
class CVRow:
    model: str
    feature_set: str
    folds: list = field(default_factory=list)

    def _agg(self, attr):
        vals = np.array([getattr(f, attr) for f in self.folds])
        return float(np.mean(vals)), float(np.std(vals))

    def summary(self) -> dict:
        out = {"model": self.model, "feature_set": self.feature_set}
        for name in ("auc", "f1", "accuracy"):
            mean, std = self._agg(name)
            out[f"{name}_mean"] = mean
            out[f"{name}_std"] = std
        return out


@dataclass
class CVReport:
    task: str
    k: int
    seed: int
    n_examples: int
    n_positive: int
    rows: list = field(default_factory=list)


def select_examples(g: RetweetGraph, labels: LabelSet, task: str,
                    seed: int = 0, negative_ratio: int = 10) -> tuple:
    """(node_idx, y) for a task.

    "hateful": every labeled user, positives are the hateful ones.
    "suspended": every suspended user as positive plus a seeded sample of
    negative_ratio times as many active users.
    """
    if task == "hateful":
        ids = [u for u in labels.labels if u in g.id_to_index]
        missing = [u for u in labels.labels if u not in g.id_to_index]
        if missing:
            raise ValueError(
                f"labeled users missing from graph: {', '.join(sorted(missing)[:5])}")
        idx = np.array([g.id_to_index[u] for u in ids], dtype=np.int64)
        y = np.array([1 if labels.labels[u] == "hateful" else 0 for u in ids],
                     dtype=np.int64)
        return idx, y
    if task == "suspended":
        if not labels.suspended:
            raise ValueError("suspended task requires suspension records")
        missing = [u for u in labels.suspended if u not in g.id_to_index]
        if missing:
            raise ValueError(
                f"suspended users missing from graph: {', '.join(sorted(missing)[:5])}")
        pos = np.array(sorted(g.id_to_index[u] for u in labels.suspended),
                       dtype=np.int64)
        active = np.setdiff1d(np.arange(g.n, dtype=np.int64), pos)
        want = min(len(active), negative_ratio * len(pos))
        rng = np.random.default_rng(seed)
        neg = np.sort(rng.choice(active, size=want, replace=False))
        idx = np.concatenate([pos, neg])
        y = np.concatenate([np.ones(len(pos), dtype=np.int64),
                            np.zeros(len(neg), dtype=np.int64)])
        return idx, y
    raise ValueError(f"unknown task {task!r} (expected hateful or suspended)")


def run_experiment(g: RetweetGraph, table: FeatureTable, labels: LabelSet,
                   task: str = "hateful", models=MODEL_NAMES,
                   feature_sets=FEATURE_SETS, k: int = 5, seed: int = 0,
                   sage_config: Optional[SageConfig] = None,
                   adaboost_rounds: int = 100, gbt_trees: int = 100) -> CVReport:
    """Cross-validate each model on each feature set over shared folds.

    The neighborhood model trains transductively: features and edges of all
    nodes participate in aggregation, while the loss only sees the training
    fold.  The flat models see training-fold rows only.
    """
    if table.user_ids != list(g.index_to_id):
        raise ValueError("feature table rows are not aligned with graph nodes")
    example_idx, y = select_examples(g, labels, task, seed)
    folds = stratified_kfold(y, k, seed)
    report = CVReport(task, k, seed, len(y), int(np.sum(y == 1)))

    for feature_set in feature_sets:
        X_all = table.matrix(feature_set)
        for model_name in models:
            if model_name not in MODEL_NAMES:
                raise ValueError(f"unknown model {model_name!r}")
            row = CVRow(model_name, feature_set)
            for f in range(k):
                test = folds == f
                train = ~test
                tr_idx, tr_y = example_idx[train], y[train]
                te_idx, te_y = example_idx[test], y[test]
                cw = float(np.sum(tr_y == 0)) / float(np.sum(tr_y == 1))
                if model_name == "sage":
                    cfg = sage_config or SageConfig()
                    cfg = SageConfig(**{**cfg.__dict__,
                                        "class_weight": cw,
                                        "seed": seed * 1000 + f})
                    model = train_sage(g, X_all, tr_idx, tr_y, cfg)
                    scores = predict_sage(model, g, X_all, te_idx)
                elif model_name == "adaboost":
                    model = train_adaboost(X_all[tr_idx], tr_y,
                                           rounds=adaboost_rounds,
                                           class_weight=cw)
                    scores = model.predict(X_all[te_idx])
                else:
                    model = train_gbt(X_all[tr_idx], tr_y, n_trees=gbt_trees,
                                      class_weight=cw)
                    scores = model.predict(X_all[te_idx])
                f1, acc, _ = f1_accuracy(scores, te_y)
                row.folds.append(FoldResult(f, auc_score(scores, te_y), f1, acc))
                logger.info("%s/%s fold %d: auc=%.4f f1=%.4f acc=%.4f",
                            model_name, feature_set, f,
                            row.folds[-1].auc, f1, acc)
            report.rows.append(row)
    return report


def write_cv_report(csv_path, report: CVReport, params: dict) -> None:
    header = ["model", "feature_set", "auc_mean", "auc_std", "f1_mean",
              "f1_std", "accuracy_mean", "accuracy_std"]

    def rows():
        for row in report.rows:
            s = row.summary()
            yield [s["model"], s["feature_set"]] + [
                fmt(s[key]) for key in header[2:]]

    write_delimited(csv_path, header, rows(), "evaluate", params)


def report_to_dict(report: CVReport) -> dict:
    return {
        "task": report.task,
        "k": report.k,
        "seed": report.seed,
        "n_examples": report.n_examples,
        "n_positive": report.n_positive,
        "results": [
            {**row.summary(),
             "folds": [{"fold": fr.fold, "auc": fr.auc, "f1": fr.f1,
                        "accuracy": fr.accuracy} for fr in row.folds]}
            for row in report.rows
        ],
    }
