"""Boosted classifiers over fixed feature vectors.

AdaBoost combines depth-1 decision stumps fit to reweighted examples; the
gradient-boosted variant fits depth-limited regression trees to the gradient
of class-weighted logistic loss, with Newton leaf values.  Both search every
midpoint threshold between distinct sorted feature values and break ties
toward the lowest feature index, then the lowest threshold, so refits are
bit-for-bit reproducible.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

EPS_ERR = 1e-10


@dataclass
class Stump:
    feature: int
    threshold: float
    polarity: int  # +1: predict +1 when x[feature] >= threshold; -1 flips


def _stump_predict(stump: Stump, X: np.ndarray) -> np.ndarray:
    side = np.where(X[:, stump.feature] >= stump.threshold, 1.0, -1.0)
    return side * stump.polarity


def _best_stump(X: np.ndarray, y_pm: np.ndarray, w: np.ndarray,
                order: np.ndarray) -> tuple:
    """Lowest weighted-error stump; ties resolve to the earliest candidate.

    `order` holds a stable argsort per feature column.  Candidates are the
    midpoints between consecutive distinct values, scanned in ascending
    order, polarity +1 before -1 at equal error.
    """
    n, d = X.shape
    best = None  # (error, feature, threshold, polarity)
    for f in range(d):
        idx = order[:, f]
        xs = X[idx, f]
        wpos = np.where(y_pm[idx] > 0, w[idx], 0.0)
        wneg = w[idx] - wpos
        cum_pos = np.concatenate([[0.0], np.cumsum(wpos)])
        total_neg = float(np.sum(wneg))
        cum_neg = np.concatenate([[0.0], np.cumsum(wneg)])
        cuts = np.flatnonzero(xs[1:] > xs[:-1]) + 1  # cut before position k
        for k in cuts:
            thr = 0.5 * (xs[k - 1] + xs[k])
            # polarity +1 mislabels positives below and negatives at or above
            err_plus = cum_pos[k] + (total_neg - cum_neg[k])
            for err, pol in ((err_plus, 1), (1.0 - err_plus, -1)):
                if best is None or err < best[0] - 1e-15:
                    best = (err, f, thr, pol)
    return best


@dataclass
class AdaBoostModel:
    stumps: list
    alphas: list
    rounds: int
    class_weight: float

    def margins(self, X: np.ndarray) -> np.ndarray:
        out = np.zeros(len(X))
        for stump, alpha in zip(self.stumps, self.alphas):
            out += alpha * _stump_predict(stump, X)
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.margins(X)))

    def to_json_dict(self) -> dict:
        from hategraph.models import pack_array
        return {
            "model_type": "adaboost",
            "hyperparameters": {"rounds": self.rounds,
                                "class_weight": self.class_weight},
            "weights": {
                "features": pack_array(np.array([s.feature for s in self.stumps])),
                "thresholds": pack_array(np.array([s.threshold for s in self.stumps])),
                "polarities": pack_array(np.array([s.polarity for s in self.stumps])),
                "alphas": pack_array(np.array(self.alphas)),
            },
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "AdaBoostModel":
        from hategraph.models import unpack_array
        w = obj["weights"]
        stumps = [Stump(int(f), float(t), int(p)) for f, t, p in
                  zip(unpack_array(w["features"]), unpack_array(w["thresholds"]),
                      unpack_array(w["polarities"]))]
        hp = obj["hyperparameters"]
        return cls(stumps, [float(a) for a in unpack_array(w["alphas"])],
                   int(hp["rounds"]), float(hp["class_weight"]))


def train_adaboost(X: np.ndarray, y01, rounds: int = 100,
                   class_weight: Optional[float] = None) -> AdaBoostModel:
    """Discrete AdaBoost on stumps with class-weighted initial weights.

    Stops early when no stump beats chance (the stump is not added) or when
    one is perfect (added with clamped coefficient).  Constant feature
    matrices admit no split at all and raise.
    """
    X = np.asarray(X, dtype=np.float64)
    y01 = np.asarray(y01)
    if X.ndim != 2 or len(X) != len(y01):
        raise ValueError("X must be 2-D with one label per row")
    y_pm = np.where(y01 == 1, 1.0, -1.0)
    n_pos = int(np.sum(y01 == 1))
    n_neg = len(y01) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("training labels must include both classes")
    cw = class_weight if class_weight is not None else n_neg / n_pos

    w = np.where(y_pm > 0, cw, 1.0)
    w /= w.sum()
    order = np.argsort(X, axis=0, kind="stable")
    stumps, alphas = [], []
    for _ in range(rounds):
        found = _best_stump(X, y_pm, w, order)
        if found is None:
            raise ValueError("no valid split: all features are constant")
        err, f, thr, pol = found
        if err >= 0.5:
            break
        stump = Stump(f, thr, pol)
        eps = min(max(err, EPS_ERR), 1.0 - EPS_ERR)
        alpha = 0.5 * np.log((1.0 - eps) / eps)
        stumps.append(stump)
        alphas.append(float(alpha))
        if err <= 0.0:
            break
        w = w * np.exp(-alpha * y_pm * _stump_predict(stump, X))
        w /= w.sum()
    return AdaBoostModel(stumps, alphas, rounds, float(cw))


@dataclass
class _TreeBuilder:
    """CART on squared error of residuals, Newton values at the leaves."""
    max_depth: int
    min_leaf: int = 1
    feature: list = field(default_factory=list)   # -1 marks a leaf
    threshold: list = field(default_factory=list)
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    value: list = field(default_factory=list)

    def build(self, X, r, w, hess, mask, depth) -> int:
        node = len(self.feature)
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        h_sum = float(np.sum(hess[mask]))
        g_sum = float(np.sum(w[mask] * r[mask]))
        self.value.append(g_sum / h_sum if h_sum > 0 else 0.0)
        if depth >= self.max_depth or np.sum(mask) < 2 * self.min_leaf:
            return node
        split = self._best_split(X, r, w, mask)
        if split is None:
            return node
        f, thr = split
        go_left = mask & (X[:, f] < thr)
        go_right = mask & (X[:, f] >= thr)
        self.feature[node] = f
        self.threshold[node] = thr
        self.left[node] = self.build(X, r, w, hess, go_left, depth + 1)
        self.right[node] = self.build(X, r, w, hess, go_right, depth + 1)
        return node

    def _best_split(self, X, r, w, mask) -> Optional[tuple]:
        idx = np.flatnonzero(mask)
        best = None  # (gain, feature, threshold)
        wr = w[idx] * r[idx]
        ww = w[idx]
        g_tot = float(np.sum(wr))
        w_tot = float(np.sum(ww))
        parent = g_tot * g_tot / w_tot if w_tot > 0 else 0.0
        for f in range(X.shape[1]):
            vals = X[idx, f]
            srt = np.argsort(vals, kind="stable")
            xs = vals[srt]
            cg = np.concatenate([[0.0], np.cumsum(wr[srt])])
            cwt = np.concatenate([[0.0], np.cumsum(ww[srt])])
            cuts = np.flatnonzero(xs[1:] > xs[:-1]) + 1
            for k in cuts:
                if k < self.min_leaf or len(idx) - k < self.min_leaf:
                    continue
                wl, wr_ = cwt[k], w_tot - cwt[k]
                if wl <= 0 or wr_ <= 0:
                    continue
                gl = cg[k]
                gain = gl * gl / wl + (g_tot - gl) ** 2 / wr_ - parent
                if gain > 1e-12 and (best is None or gain > best[0] + 1e-15):
                    best = (gain, f, 0.5 * (xs[k - 1] + xs[k]))
        return None if best is None else (best[1], best[2])


@dataclass
class RegressionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        nodes = np.zeros(len(X), dtype=np.int64)
        while True:
            f = self.feature[nodes]
            live = np.flatnonzero(f >= 0)
            if len(live) == 0:
                return self.value[nodes]
            x = X[live, f[live]]
            goes_left = x < self.threshold[nodes[live]]
            nodes[live] = np.where(goes_left, self.left[nodes[live]],
                                   self.right[nodes[live]])


@dataclass
class GBTModel:
    trees: list
    base_score: float     # prior log-odds
    learning_rate: float
    max_depth: int
    class_weight: float

    def decision(self, X: np.ndarray) -> np.ndarray:
        F = np.full(len(X), self.base_score)
        for tree in self.trees:
            F += self.learning_rate * tree.predict(X)
        return F

    def predict(self, X: np.ndarray) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.decision(X)))

    def to_json_dict(self) -> dict:
        from hategraph.models import pack_array
        return {
            "model_type": "gbt",
            "hyperparameters": {
                "n_trees": len(self.trees), "base_score": self.base_score,
                "learning_rate": self.learning_rate, "max_depth": self.max_depth,
                "class_weight": self.class_weight,
            },
            "weights": {
                "tree_sizes": pack_array(np.array([len(t.feature) for t in self.trees])),
                "features": pack_array(np.concatenate([t.feature for t in self.trees]) if self.trees else np.zeros(0)),
                "thresholds": pack_array(np.concatenate([t.threshold for t in self.trees]) if self.trees else np.zeros(0)),
                "lefts": pack_array(np.concatenate([t.left for t in self.trees]) if self.trees else np.zeros(0)),
                "rights": pack_array(np.concatenate([t.right for t in self.trees]) if self.trees else np.zeros(0)),
                "values": pack_array(np.concatenate([t.value for t in self.trees]) if self.trees else np.zeros(0)),
            },
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "GBTModel":
        from hategraph.models import unpack_array
        hp = obj["hyperparameters"]
        w = obj["weights"]
        sizes = unpack_array(w["tree_sizes"]).astype(np.int64)
        bounds = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        trees = []
        for i in range(len(sizes)):
            lo, hi = bounds[i], bounds[i + 1]
            trees.append(RegressionTree(
                unpack_array(w["features"])[lo:hi].astype(np.int64),
                unpack_array(w["thresholds"])[lo:hi],
                unpack_array(w["lefts"])[lo:hi].astype(np.int64),
                unpack_array(w["rights"])[lo:hi].astype(np.int64),
                unpack_array(w["values"])[lo:hi]))
        return cls(trees, float(hp["base_score"]), float(hp["learning_rate"]),
                   int(hp["max_depth"]), float(hp["class_weight"]))


def train_gbt(X: np.ndarray, y01, n_trees: int = 100, max_depth: int = 3,
              learning_rate: float = 0.1,
              class_weight: Optional[float] = None) -> GBTModel:
    """Boosted regression trees on the gradient of weighted logistic loss.

    The model starts from the weighted prior log-odds; each stage fits
    residuals y - p under example weights and assigns leaves the Newton step
    sum(w * r) / sum(w * p * (1 - p)).  learning_rate 0 keeps the prior model:
    every score equals the weighted base rate.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y01, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-D with one label per row")
    n_pos = int(np.sum(y == 1.0))
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("training labels must include both classes")
    cw = class_weight if class_weight is not None else n_neg / n_pos

    w = np.where(y == 1.0, cw, 1.0)
    pos_mass = float(np.sum(w * y))
    neg_mass = float(np.sum(w * (1.0 - y)))
    base = float(np.log(pos_mass / neg_mass))
    F = np.full(len(y), base)
    trees = []
    all_mask = np.ones(len(y), dtype=bool)
    for _ in range(n_trees):
        p = 1.0 / (1.0 + np.exp(-F))
        r = y - p
        hess = w * p * (1.0 - p)
        builder = _TreeBuilder(max_depth=max_depth)
        builder.build(X, r, w, hess, all_mask, 0)
        tree = RegressionTree(
            np.array(builder.feature, dtype=np.int64),
            np.array(builder.threshold, dtype=np.float64),
            np.array(builder.left, dtype=np.int64),
            np.array(builder.right, dtype=np.int64),
            np.array(builder.value, dtype=np.float64))
        trees.append(tree)
        if learning_rate != 0.0:
            F = F + learning_rate * tree.predict(X)
        if not np.all(np.isfinite(F)):
            raise RuntimeError("training diverged: non-finite decision values")
    return GBTModel(trees, base, float(learning_rate), int(max_depth), float(cw))
