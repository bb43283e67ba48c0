"""Two-layer neighborhood-aggregation classifier, trained with minibatch Adam.

Each layer concatenates a node's current representation with the mean of its
(sampled) undirected neighbors' representations, applies a linear map and
ReLU, then L2-normalizes.  Training samples a fixed number of neighbors with
replacement per layer; inference aggregates over the full neighborhood, so
scores are deterministic.  Forward and backward passes are written directly
in numpy; see gradient_check for the finite-difference harness.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from hategraph.graph import RetweetGraph

logger = logging.getLogger(__name__)


@dataclass
class SageConfig:
    hidden: int = 128
    sample_l1: int = 25      # neighbors sampled per node at the inner layer
    sample_l2: int = 10      # neighbors sampled per batch node at the outer layer
    epochs: int = 10
    batch_size: int = 512
    lr: float = 0.01
    class_weight: Optional[float] = None  # None -> n_negative / n_positive
    activation: str = "relu"              # "identity" turns the net linear
    normalize: bool = True
    loss: str = "bce"                     # "mean_logit" for the gradient harness
    seed: int = 0


@dataclass
class SageModel:
    config: SageConfig
    input_dim: int
    W1: np.ndarray        # (hidden, 2 * input_dim)
    W2: np.ndarray        # (hidden, 2 * hidden)
    w_out: np.ndarray     # (hidden,)
    b_out: float
    feat_mean: np.ndarray
    feat_std: np.ndarray
    history: list = field(default_factory=list)  # mean train loss per epoch

    def to_json_dict(self) -> dict:
        from hategraph.models import pack_array
        cfg = self.config
        return {
            "model_type": "sage",
            "hyperparameters": {
                "hidden": cfg.hidden, "sample_l1": cfg.sample_l1,
                "sample_l2": cfg.sample_l2, "epochs": cfg.epochs,
                "batch_size": cfg.batch_size, "lr": cfg.lr,
                "class_weight": cfg.class_weight, "activation": cfg.activation,
                "normalize": cfg.normalize, "loss": cfg.loss, "seed": cfg.seed,
                "input_dim": self.input_dim,
            },
            "weights": {
                "W1": pack_array(self.W1), "W2": pack_array(self.W2),
                "w_out": pack_array(self.w_out),
                "b_out": pack_array(np.array([self.b_out])),
                "feat_mean": pack_array(self.feat_mean),
                "feat_std": pack_array(self.feat_std),
            },
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "SageModel":
        from hategraph.models import unpack_array
        hp = dict(obj["hyperparameters"])
        input_dim = hp.pop("input_dim")
        cfg = SageConfig(**hp)
        w = obj["weights"]
        return cls(cfg, input_dim, unpack_array(w["W1"]), unpack_array(w["W2"]),
                   unpack_array(w["w_out"]), float(unpack_array(w["b_out"])[0]),
                   unpack_array(w["feat_mean"]), unpack_array(w["feat_std"]))


def _standardize_params(X: np.ndarray) -> tuple:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    return mean, std


def _sample_neighbors(indptr, indices, nodes, size, rng) -> np.ndarray:
    """(len(nodes), size) global indices sampled with replacement; -1 if none."""
    nodes = np.asarray(nodes, dtype=np.int64)
    lo = indptr[nodes]
    deg = indptr[nodes + 1] - lo
    if len(indices) == 0:
        return np.full((len(nodes), size), -1, dtype=np.int64)
    r = rng.random((len(nodes), size))
    picks = lo[:, None] + (r * deg[:, None]).astype(np.int64)
    picks = np.minimum(picks, len(indices) - 1)
    return np.where(deg[:, None] > 0, indices[picks], -1)


def _masked_mean(X: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Mean of X rows over the sample axis; -1 entries contribute zero."""
    vals = X[np.maximum(idx, 0)] * (idx >= 0)[:, :, None]
    return vals.sum(axis=1) / idx.shape[1]


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "identity":
        return z
    raise ValueError(f"unknown activation {kind!r}")


def _l2_rows(a: np.ndarray) -> tuple:
    """Row-normalize, leaving all-zero rows at zero; returns (normed, norms)."""
    norms = np.linalg.norm(a, axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    return a / safe, norms


def _l2_rows_backward(g: np.ndarray, normed: np.ndarray, norms: np.ndarray) -> np.ndarray:
    safe = np.where(norms == 0.0, 1.0, norms)
    dot = np.sum(g * normed, axis=1, keepdims=True)
    out = (g - normed * dot) / safe
    return np.where(norms == 0.0, 0.0, out)


def _forward(W1, W2, w_out, b_out, X, pos_batch, unique1, n1_idx, n2_local, cfg):
    """Logits for one batch given fixed neighbor samples.

    pos_batch: rows of `unique1` that form the batch; n1_idx: (len(unique1),
    S1) global sample indices; n2_local: (batch, S2) rows into `unique1`.
    Returns (logits, cache) with every intermediate needed by _backward.
    """
    c0 = np.hstack([X[unique1], _masked_mean(X, n1_idx)])
    z1 = c0 @ W1.T
    a1 = _activate(z1, cfg.activation)
    if cfg.normalize:
        h1, norms1 = _l2_rows(a1)
    else:
        h1, norms1 = a1, None
    mean2 = _masked_mean(h1, n2_local)
    c1 = np.hstack([h1[pos_batch], mean2])
    z2 = c1 @ W2.T
    a2 = _activate(z2, cfg.activation)
    if cfg.normalize:
        h2, norms2 = _l2_rows(a2)
    else:
        h2, norms2 = a2, None
    logits = h2 @ w_out + b_out
    cache = (c0, z1, a1, h1, norms1, c1, z2, a2, h2, norms2)
    return logits, cache


def _loss_and_dlogits(logits, y, sample_w, kind):
    m = len(logits)
    if kind == "mean_logit":
        return float(np.mean(logits)), np.full(m, 1.0 / m)
    if kind != "bce":
        raise ValueError(f"unknown loss {kind!r}")
    # stable log(1 + exp(-|z|)) form of the class-weighted cross entropy
    z = logits
    ll = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    loss = float(np.sum(sample_w * ll) / m)
    p = 1.0 / (1.0 + np.exp(-z))
    return loss, sample_w * (p - y) / m


def _backward(dlogits, W2, w_out, cache, pos_batch, n2_local, cfg):
    c0, z1, a1, h1, norms1, c1, z2, a2, h2, norms2 = cache
    g_w_out = h2.T @ dlogits
    g_b_out = float(np.sum(dlogits))
    g_h2 = np.outer(dlogits, w_out)
    g_a2 = _l2_rows_backward(g_h2, h2, norms2) if cfg.normalize else g_h2
    g_z2 = g_a2 * (z2 > 0.0) if cfg.activation == "relu" else g_a2
    g_W2 = g_z2.T @ c1
    g_c1 = g_z2 @ W2
    hid = W2.shape[0]
    g_h1 = np.zeros_like(h1)
    np.add.at(g_h1, pos_batch, g_c1[:, :hid])
    s2 = n2_local.shape[1]
    flat = n2_local.ravel()
    contrib = np.repeat(g_c1[:, hid:] / s2, s2, axis=0)
    valid = flat >= 0
    np.add.at(g_h1, flat[valid], contrib[valid])
    g_a1 = _l2_rows_backward(g_h1, h1, norms1) if cfg.normalize else g_h1
    g_z1 = g_a1 * (z1 > 0.0) if cfg.activation == "relu" else g_a1
    g_W1 = g_z1.T @ c0
    return g_W1, g_W2, g_w_out, g_b_out


def _batch_tensors(indptr, indices, batch_nodes, cfg, rng):
    """Sample both layers for a batch and localize indices into unique1."""
    n2_global = _sample_neighbors(indptr, indices, batch_nodes, cfg.sample_l2, rng)
    pool = np.concatenate([np.asarray(batch_nodes, dtype=np.int64),
                           n2_global[n2_global >= 0].ravel()])
    unique1 = np.unique(pool)
    lookup = {int(u): i for i, u in enumerate(unique1)}
    pos_batch = np.array([lookup[int(u)] for u in batch_nodes], dtype=np.int64)
    n2_local = np.where(
        n2_global >= 0,
        np.searchsorted(unique1, np.maximum(n2_global, unique1[0])), -1)
    n1_idx = _sample_neighbors(indptr, indices, unique1, cfg.sample_l1, rng)
    return pos_batch, unique1, n1_idx, n2_local


def _init_params(input_dim, cfg, rng):
    # Glorot-style uniform bounds
    lim1 = np.sqrt(6.0 / (2 * input_dim + cfg.hidden))
    lim2 = np.sqrt(6.0 / (2 * cfg.hidden + cfg.hidden))
    W1 = rng.uniform(-lim1, lim1, size=(cfg.hidden, 2 * input_dim))
    W2 = rng.uniform(-lim2, lim2, size=(cfg.hidden, 2 * cfg.hidden))
    w_out = rng.uniform(-0.1, 0.1, size=cfg.hidden)
    return W1, W2, w_out, 0.0


class _Adam:
    def __init__(self, shapes, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        out = []
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = self.b1 * self.m[i] + (1 - self.b1) * g
            self.v[i] = self.b2 * self.v[i] + (1 - self.b2) * g * g
            mhat = self.m[i] / (1 - self.b1 ** self.t)
            vhat = self.v[i] / (1 - self.b2 ** self.t)
            out.append(p - self.lr * mhat / (np.sqrt(vhat) + self.eps))
        return out


def train_sage(g: RetweetGraph, X: np.ndarray, train_idx, y,
               config: Optional[SageConfig] = None) -> SageModel:
    """Fit on the labeled nodes; aggregation may pull in any node's features.

    X holds raw features for every graph node in node order; train_idx/y give
    the supervised subset.  Standardization statistics come from the full
    matrix and are stored on the model.
    """
    cfg = config or SageConfig()
    train_idx = np.asarray(train_idx, dtype=np.int64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != g.n:
        raise ValueError(f"feature matrix has {X.shape[0]} rows for {g.n} nodes")
    if len(train_idx) != len(y):
        raise ValueError("train_idx and y length mismatch")
    n_pos = int(np.sum(y == 1.0))
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("training labels must include both classes")
    cw = cfg.class_weight if cfg.class_weight is not None else n_neg / n_pos

    mean, std = _standardize_params(X)
    Xs = (X - mean) / std
    indptr, indices = g.undirected_neighbors()
    rng = np.random.default_rng(cfg.seed)
    W1, W2, w_out, b_out = _init_params(X.shape[1], cfg, rng)
    adam = _Adam([W1.shape, W2.shape, w_out.shape, ()], cfg.lr)

    history = []
    for _ in range(cfg.epochs):
        order = rng.permutation(len(train_idx))
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            sel = order[start:start + cfg.batch_size]
            batch_nodes = train_idx[sel]
            yb = y[sel]
            wb = np.where(yb == 1.0, cw, 1.0)
            pos_batch, unique1, n1_idx, n2_local = _batch_tensors(
                indptr, indices, batch_nodes, cfg, rng)
            logits, cache = _forward(W1, W2, w_out, b_out, Xs, pos_batch,
                                     unique1, n1_idx, n2_local, cfg)
            loss, dlogits = _loss_and_dlogits(logits, yb, wb, cfg.loss)
            if not np.isfinite(loss):
                raise RuntimeError(f"training diverged: loss={loss}")
            grads = _backward(dlogits, W2, w_out, cache, pos_batch, n2_local, cfg)
            W1, W2, w_out, b_out = adam.step(
                [W1, W2, w_out, b_out],
                [grads[0], grads[1], grads[2], grads[3]])
            losses.append(loss)
        history.append(float(np.mean(losses)))

    return SageModel(cfg, X.shape[1], W1, W2, w_out, float(b_out),
                     mean, std, history)


def predict_sage(model: SageModel, g: RetweetGraph, X: np.ndarray,
                 nodes=None) -> np.ndarray:
    """Deterministic scores using full-neighborhood means at both layers."""
    if X.shape[0] != g.n:
        raise ValueError(f"feature matrix has {X.shape[0]} rows for {g.n} nodes")
    if X.shape[1] != model.input_dim:
        raise ValueError(
            f"model expects {model.input_dim} features, got {X.shape[1]}")
    cfg = model.config
    Xs = (X - model.feat_mean) / model.feat_std
    indptr, indices = g.undirected_neighbors()
    deg = np.diff(indptr).astype(np.float64)
    inv = np.where(deg > 0, 1.0 / np.maximum(deg, 1.0), 0.0)
    data = np.repeat(inv, np.diff(indptr))
    S = sp.csr_matrix((data, indices, indptr), shape=(g.n, g.n))

    h1 = _activate(np.hstack([Xs, S @ Xs]) @ model.W1.T, cfg.activation)
    if cfg.normalize:
        h1, _ = _l2_rows(h1)
    h2 = _activate(np.hstack([h1, S @ h1]) @ model.W2.T, cfg.activation)
    if cfg.normalize:
        h2, _ = _l2_rows(h2)
    logits = h2 @ model.w_out + model.b_out
    if nodes is not None:
        logits = logits[np.asarray(nodes, dtype=np.int64)]
    return 1.0 / (1.0 + np.exp(-logits))


def gradient_check(g: RetweetGraph, X: np.ndarray, train_idx, y,
                   config: Optional[SageConfig] = None, h: float = 1e-5,
                   corrupt: float = 0.0) -> float:
    """Max relative error between analytic and central-difference gradients.

    Neighbor samples are drawn once and frozen so both sides differentiate
    the same function.  `corrupt` adds that value to one analytic gradient
    entry, letting callers confirm the check actually detects a wrong
    gradient.  Relative error uses |ga - gn| / max(1e-8, |ga| + |gn|).
    """
    cfg = config or SageConfig()
    train_idx = np.asarray(train_idx, dtype=np.int64)
    y = np.asarray(y, dtype=np.float64)
    mean, std = _standardize_params(X)
    Xs = (X - mean) / std
    indptr, indices = g.undirected_neighbors()
    rng = np.random.default_rng(cfg.seed)
    W1, W2, w_out, b_out = _init_params(X.shape[1], cfg, rng)
    pos_batch, unique1, n1_idx, n2_local = _batch_tensors(
        indptr, indices, train_idx, cfg, rng)
    n_pos = max(1, int(np.sum(y == 1.0)))
    cw = cfg.class_weight if cfg.class_weight is not None else (len(y) - n_pos) / n_pos
    sample_w = np.where(y == 1.0, cw, 1.0)

    def loss_at(params):
        logits, _ = _forward(params[0], params[1], params[2], params[3], Xs,
                             pos_batch, unique1, n1_idx, n2_local, cfg)
        loss, _ = _loss_and_dlogits(logits, y, sample_w, cfg.loss)
        return loss

    logits, cache = _forward(W1, W2, w_out, b_out, Xs, pos_batch, unique1,
                             n1_idx, n2_local, cfg)
    _, dlogits = _loss_and_dlogits(logits, y, sample_w, cfg.loss)
    analytic = list(_backward(dlogits, W2, w_out, cache, pos_batch, n2_local, cfg))
    if corrupt != 0.0:
        analytic[0] = analytic[0].copy()
        analytic[0].flat[0] += corrupt

    # the bias lives in a length-1 array so the loop below can mutate it in place
    params = [W1.copy(), W2.copy(), w_out.copy(), np.array([b_out])]
    worst = 0.0
    for pi in range(len(params)):
        flat_param = params[pi].reshape(-1)
        flat_grad = np.atleast_1d(np.asarray(analytic[pi], dtype=np.float64)).ravel()
        for j in range(flat_param.size):
            orig = flat_param[j]
            flat_param[j] = orig + h
            up = loss_at(params)
            flat_param[j] = orig - h
            down = loss_at(params)
            flat_param[j] = orig
            numeric = (up - down) / (2 * h)
            ga = flat_grad[j]
            err = abs(ga - numeric) / max(1e-8, abs(ga) + abs(numeric))
            worst = max(worst, err)
    return worst
