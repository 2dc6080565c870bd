"""Meta-learners for stacking and gated stacking: logistic regression,
random forest, linear SVM, and kNN, all first-principles with one
fit/predict contract.

Hyperparameter defaults are fixed (k=5, trees=100, depth 16, L2=1e-4,
epochs=200) and echoed into every report.  All four kinds are deterministic
given (X, y, cfg, seed); forest fitting may parallelize across trees with
per-tree seed streams, so results are identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import EmptyTrainingSet, WidthMismatch

META_KINDS = ("lr", "rf", "svm", "knn")


@dataclass(frozen=True)
class MetaConfig:
    knn_k: int = 5
    trees: int = 100
    max_depth: int = 16
    l2: float = 1e-4
    epochs: int = 200
    learning_rate: float = 0.5
    svm_learning_rate: float = 0.1

    def echo(self) -> dict:
        return {"knn_k": self.knn_k, "trees": self.trees, "max_depth": self.max_depth,
                "l2": self.l2, "epochs": self.epochs,
                "learning_rate": self.learning_rate,
                "svm_learning_rate": self.svm_learning_rate}


@dataclass(frozen=True)
class MetaModel:
    kind: str
    params: dict
    input_width: int
    output_width: int
    config: MetaConfig = field(default_factory=MetaConfig)


def _check_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyTrainingSet("need at least one training row")
    if X.shape[0] != len(y):
        raise WidthMismatch(f"{X.shape[0]} rows vs {len(y)} labels")
    return X, y


def meta_fit(kind: str, X, y, cfg: MetaConfig = MetaConfig(), seed: int = 0,
             output_width: int | None = None, workers: int = 1) -> MetaModel:
    X, y = _check_xy(X, y)
    k_out = output_width or int(y.max()) + 1
    if kind == "lr":
        params = _fit_lr(X, y, k_out, cfg, seed)
    elif kind == "svm":
        params = _fit_svm(X, y, k_out, cfg)
    elif kind == "rf":
        params = _fit_rf(X, y, k_out, cfg, seed, workers)
    elif kind == "knn":
        params = {"rows": X.tolist(), "labels": y.tolist(),
                  "k": min(cfg.knn_k, X.shape[0])}
    else:
        raise ValueError(f"unknown meta kind {kind!r}")
    return MetaModel(kind, params, X.shape[1], k_out, cfg)


def meta_predict(m: MetaModel, x) -> np.ndarray:
    return meta_predict_many(m, np.asarray(x, dtype=np.float64)[None, :])[0]


def meta_predict_many(m: MetaModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != m.input_width:
        raise WidthMismatch(f"row width {X.shape[1:]} != model input {m.input_width}")
    if m.kind == "lr":
        W = np.asarray(m.params["W"])
        b = np.asarray(m.params["b"])
        return _kernels.softmax(X @ W.T + b)
    if m.kind == "svm":
        W = np.asarray(m.params["W"])
        b = np.asarray(m.params["b"])
        squashed = 1.0 / (1.0 + np.exp(-(X @ W.T + b)))  # unit-scale logistic
        return squashed / squashed.sum(axis=1, keepdims=True)
    if m.kind == "rf":
        out = np.zeros((X.shape[0], m.output_width))
        for tree in m.params["trees"]:
            out += _tree_predict(tree, X)
        return out / len(m.params["trees"])
    if m.kind == "knn":
        return _knn_predict(m, X)
    raise ValueError(f"unknown meta kind {m.kind!r}")


# ---------------------------------------------------------------------------
# logistic regression (full-batch softmax GD)
# ---------------------------------------------------------------------------

def _fit_lr(X, y, k_out, cfg, seed):
    n = X.shape[0]
    targets = np.zeros((n, k_out))
    targets[np.arange(n), y] = 1.0
    W = np.zeros((k_out, X.shape[1]))
    b = np.zeros(k_out)
    # full batch: the identity permutation each epoch keeps this pure GD
    order = np.tile(np.arange(n, dtype=np.int64), (cfg.epochs, 1))
    decay = 1.0 - cfg.learning_rate * cfg.l2
    _kernels.dense_softmax_fit(X, targets, np.ones(n), W, b, order, n,
                               cfg.learning_rate, decay)
    return {"W": W.tolist(), "b": b.tolist()}


# ---------------------------------------------------------------------------
# linear SVM (one-vs-rest hinge subgradient)
# ---------------------------------------------------------------------------

def _fit_svm(X, y, k_out, cfg):
    n = X.shape[0]
    S = -np.ones((n, k_out))
    S[np.arange(n), y] = 1.0
    W = np.zeros((k_out, X.shape[1]))
    b = np.zeros(k_out)
    _kernels.hinge_ovr_fit(X, S, W, b, cfg.epochs, cfg.svm_learning_rate, cfg.l2)
    return {"W": W.tolist(), "b": b.tolist()}


# ---------------------------------------------------------------------------
# random forest (Gini trees, bootstrap rows, sqrt-width feature subsampling)
# ---------------------------------------------------------------------------

def _fit_rf(X, y, k_out, cfg, seed, workers):
    def build(t):
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0x43E57, t]))
        rows = rng.integers(0, X.shape[0], size=X.shape[0])
        return _build_tree(X[rows], y[rows], 0, rng, k_out, cfg.max_depth)

    if workers <= 1:
        trees = [build(t) for t in range(cfg.trees)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trees = list(pool.map(build, range(cfg.trees)))
    return {"trees": trees}


def _leaf(y, k_out):
    counts = np.bincount(y, minlength=k_out).astype(np.float64)
    return ["leaf", (counts / counts.sum()).tolist()]


def _build_tree(X, y, depth, rng, k_out, max_depth):
    n, d = X.shape
    if n < 2 or depth >= max_depth or (y == y[0]).all():
        return _leaf(y, k_out)
    m = max(1, int(np.sqrt(d)))
    feats = rng.choice(d, size=m, replace=False)
    best_g, best_f, best_thr = np.inf, -1, 0.0
    for f in feats:
        order = np.argsort(X[:, f], kind="stable")
        vals = X[order, f]
        ys = y[order]
        g, pos = _kernels.split_scan(vals, ys, k_out)
        if pos >= 0 and g < best_g:
            best_g, best_f = g, int(f)
            best_thr = (vals[pos] + vals[pos + 1]) / 2.0
    if best_f < 0:
        return _leaf(y, k_out)
    left = X[:, best_f] <= best_thr
    if not left.any() or left.all():
        return _leaf(y, k_out)
    return ["split", best_f, best_thr,
            _build_tree(X[left], y[left], depth + 1, rng, k_out, max_depth),
            _build_tree(X[~left], y[~left], depth + 1, rng, k_out, max_depth)]


def _tree_predict(tree, X):
    out = np.empty((X.shape[0], len(_tree_first_leaf(tree))))
    for i in range(X.shape[0]):
        node = tree
        while node[0] == "split":
            node = node[3] if X[i, node[1]] <= node[2] else node[4]
        out[i] = node[1]
    return out


def _tree_first_leaf(tree):
    node = tree
    while node[0] == "split":
        node = node[3]
    return node[1]


# ---------------------------------------------------------------------------
# kNN (Euclidean; distance ties at the k-th neighbor include all equidistant)
# ---------------------------------------------------------------------------

def _knn_predict(m: MetaModel, X):
    rows = np.asarray(m.params["rows"], dtype=np.float64)
    labels = np.asarray(m.params["labels"], dtype=np.int64)
    k = m.params["k"]
    dists = _kernels.sq_dists(X, rows)
    out = np.zeros((X.shape[0], m.output_width))
    for i in range(X.shape[0]):
        d = dists[i]
        kth = np.partition(d, k - 1)[k - 1]
        neighbors = np.flatnonzero(d <= kth)  # includes ties beyond k
        votes = np.bincount(labels[neighbors], minlength=m.output_width)
        out[i] = votes / votes.sum()
    return out
