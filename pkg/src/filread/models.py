"""Logistic regression, linear SVM and random forest classifiers.

All three are trained on standardized feature matrices. A trained model
carries the standardization statistics and feature names it was fitted
with, so raw feature vectors can be scored directly.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from .features import FeatureVector, StandardizationStats

__all__ = [
    "MODEL_KINDS",
    "TrainConfig",
    "DecisionTree",
    "TrainedModel",
    "train",
    "train_logreg",
    "train_svm",
    "train_rf",
    "fit_tree",
    "logreg_loss_grad",
    "softmax",
    "gini",
    "predict_proba",
    "predict_label",
    "save_model",
    "load_model",
]

MODEL_KINDS = ("logreg", "svm", "rf")
FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    model_kind: str = "rf"
    l2_lambda: float = 1e-3
    learning_rate: float = 0.1
    epochs: int = 500
    n_trees: int = 100
    max_depth: int | None = 12
    features_per_split: str = "sqrt"
    rng_seed: int = 42
    bootstrap: bool = True
    batch_size: int = 32

    def validate(self) -> None:
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.model_kind!r}; expected one of {MODEL_KINDS}")
        if self.model_kind in ("logreg", "svm"):
            if self.l2_lambda < 0:
                raise ValueError("l2_lambda must be >= 0")
            if not self.learning_rate > 0:
                raise ValueError("learning_rate must be > 0")
            if self.epochs < 1:
                raise ValueError("epochs must be >= 1")
            if self.batch_size < 1:
                raise ValueError("batch_size must be >= 1")
        if self.model_kind == "rf":
            if self.n_trees < 1:
                raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")
            if self.max_depth is not None and self.max_depth < 1:
                raise ValueError("max_depth must be >= 1 (or None for unlimited)")
            if self.features_per_split not in ("sqrt", "all"):
                raise ValueError(f"features_per_split must be 'sqrt' or 'all', got {self.features_per_split!r}")


@dataclass(frozen=True)
class DecisionTree:
    """Flat array tree; ``feature == -1`` marks a leaf.

    Samples with ``x[feature] <= threshold`` go left. ``value`` holds the
    (bootstrap-weighted) class histogram of every node.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    impurity: np.ndarray
    n_samples: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=int)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            active = f >= 0
            if not active.any():
                return node
            r = rows[active]
            n = node[active]
            go_left = X[r, f[active]] <= self.threshold[n]
            node[active] = np.where(go_left, self.left[n], self.right[n])

    def leaf_class_index(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.value[self.apply(X)], axis=1)

    def impurity_decrease(self, n_features: int) -> np.ndarray:
        """Per-feature sum of weighted Gini decrease times node sample fraction."""
        out = np.zeros(n_features)
        root_n = self.n_samples[0]
        for i in np.flatnonzero(self.feature >= 0):
            l, r = self.left[i], self.right[i]
            n = self.n_samples[i]
            child = (self.n_samples[l] * self.impurity[l] + self.n_samples[r] * self.impurity[r]) / n
            out[self.feature[i]] += (self.impurity[i] - child) * n / root_n
        return out

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "impurity": self.impurity.tolist(),
            "n_samples": self.n_samples.tolist(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "DecisionTree":
        return cls(
            feature=np.asarray(d["feature"], dtype=int),
            threshold=np.asarray(d["threshold"], dtype=float),
            left=np.asarray(d["left"], dtype=int),
            right=np.asarray(d["right"], dtype=int),
            value=np.asarray(d["value"], dtype=float),
            impurity=np.asarray(d["impurity"], dtype=float),
            n_samples=np.asarray(d["n_samples"], dtype=float),
        )


@dataclass(frozen=True)
class TrainedModel:
    kind: str
    classes: tuple[int, ...]
    feature_names: tuple[str, ...]
    stats: StandardizationStats
    config: TrainConfig
    weights: np.ndarray | None = None
    bias: np.ndarray | None = None
    trees: tuple[DecisionTree, ...] = field(default=())

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def decision_function(self, Z: np.ndarray) -> np.ndarray:
        if self.kind == "rf":
            raise TypeError("random forests have no linear decision function")
        return Z @ self.weights.T + self.bias

    def proba_z(self, Z) -> np.ndarray:
        """Class probabilities for rows already in z-space."""
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        if Z.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {Z.shape[1]}")
        if self.kind == "rf":
            votes = np.zeros((Z.shape[0], len(self.classes)))
            rows = np.arange(Z.shape[0])
            for tree in self.trees:
                votes[rows, tree.leaf_class_index(Z)] += 1
            return votes / len(self.trees)
        return softmax(self.decision_function(Z))


def softmax(S: np.ndarray) -> np.ndarray:
    S = S - S.max(axis=-1, keepdims=True)
    E = np.exp(S)
    return E / E.sum(axis=-1, keepdims=True)


def gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.dot(p, p))


# --- shared validation --------------------------------------------------------


def _prepare(X, y, feature_names, stats):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]} labels")
    if X.shape[0] == 0:
        raise ValueError("no training rows")
    classes = tuple(int(c) for c in np.unique(y))
    if len(classes) < 2:
        raise ValueError(f"need at least 2 classes to train, got {classes}")
    if feature_names is None:
        feature_names = tuple(f"f{i}" for i in range(X.shape[1]))
    feature_names = tuple(feature_names)
    if len(feature_names) != X.shape[1]:
        raise ValueError("feature_names length does not match X columns")
    if stats is None:
        stats = StandardizationStats.identity(X.shape[1])
    yi = np.searchsorted(classes, y)
    return X, yi, classes, feature_names, stats


def _canonical_order(X: np.ndarray, yi: np.ndarray) -> np.ndarray:
    # row order must not influence full-batch sums
    keys = np.column_stack([X, yi]).T[::-1]
    return np.lexsort(keys)


# --- logistic regression --------------------------------------------------------


def logreg_loss_grad(W: np.ndarray, b: np.ndarray, X: np.ndarray, Y: np.ndarray, l2: float):
    """Mean cross-entropy plus ``l2/2 * ||W||^2`` and its gradients.

    ``Y`` is one-hot (n x K). The bias is not penalized.
    """
    n = X.shape[0]
    P = softmax(X @ W.T + b)
    logp = np.log(np.clip(P, 1e-300, None))
    loss = -np.sum(Y * logp) / n + 0.5 * l2 * np.sum(W * W)
    D = (P - Y) / n
    return loss, D.T @ X + l2 * W, D.sum(axis=0)


def train_logreg(X, y, cfg: TrainConfig | None = None, *, feature_names=None, stats=None) -> TrainedModel:
    """Multinomial logistic regression by full-batch gradient descent from zero weights."""
    cfg = replace(cfg or TrainConfig(), model_kind="logreg")
    cfg.validate()
    X, yi, classes, names, stats = _prepare(X, y, feature_names, stats)
    order = _canonical_order(X, yi)
    X, yi = X[order], yi[order]
    K = len(classes)
    Y = np.eye(K)[yi]
    W = np.zeros((K, X.shape[1]))
    b = np.zeros(K)
    for _ in range(cfg.epochs):
        _, gW, gb = logreg_loss_grad(W, b, X, Y, cfg.l2_lambda)
        W -= cfg.learning_rate * gW
        b -= cfg.learning_rate * gb
    return TrainedModel("logreg", classes, names, stats, cfg, weights=W, bias=b)


# --- linear SVM -----------------------------------------------------------------


def train_svm(X, y, cfg: TrainConfig | None = None, *, feature_names=None, stats=None) -> TrainedModel:
    """One-vs-rest linear SVM: hinge loss + L2 by mini-batch subgradient descent.

    The step size decays as ``learning_rate / sqrt(1 + epoch)`` and rows are
    reshuffled every epoch from a seeded generator.
    """
    cfg = replace(cfg or TrainConfig(), model_kind="svm")
    cfg.validate()
    X, yi, classes, names, stats = _prepare(X, y, feature_names, stats)
    order = _canonical_order(X, yi)
    X, yi = X[order], yi[order]
    n, d = X.shape
    K = len(classes)
    S = np.where(np.eye(K, dtype=bool)[yi], 1.0, -1.0)  # n x K signs
    W = np.zeros((K, d))
    b = np.zeros(K)
    rng = np.random.default_rng(cfg.rng_seed)
    for epoch in range(cfg.epochs):
        lr = cfg.learning_rate / math.sqrt(1.0 + epoch)
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            Xb, Sb = X[idx], S[idx]
            active = (Sb * (Xb @ W.T + b)) < 1.0
            coef = np.where(active, Sb, 0.0)
            W -= lr * (cfg.l2_lambda * W - coef.T @ Xb / len(idx))
            b -= lr * (-coef.mean(axis=0))
    return TrainedModel("svm", classes, names, stats, cfg, weights=W, bias=b)


# --- random forest --------------------------------------------------------------


def _best_split(Xn: np.ndarray, yn: np.ndarray, feats: np.ndarray, K: int):
    n = len(yn)
    onehot = np.eye(K)[yn]
    best = (np.inf, -1, 0.0)
    for f in feats:
        order = np.argsort(Xn[:, f], kind="stable")
        xs = Xn[order, f]
        valid = xs[:-1] < xs[1:]
        if not valid.any():
            continue
        left = np.cumsum(onehot[order], axis=0)[:-1]
        right = left[-1] + onehot[order[-1]] - left
        nl = np.arange(1, n, dtype=float)
        nr = n - nl
        gl = 1.0 - np.sum(left * left, axis=1) / (nl * nl)
        gr = 1.0 - np.sum(right * right, axis=1) / (nr * nr)
        cost = np.where(valid, (nl * gl + nr * gr) / n, np.inf)
        i = int(np.argmin(cost))
        if cost[i] < best[0]:
            thr = 0.5 * (xs[i] + xs[i + 1])
            if not xs[i] <= thr < xs[i + 1]:
                thr = xs[i]
            best = (cost[i], int(f), float(thr))
    return best


def fit_tree(X: np.ndarray, yi: np.ndarray, n_classes: int, max_depth: int | None, n_split_features: int, rng: np.random.Generator) -> DecisionTree:
    """Greedy CART on Gini impurity.

    Each node draws ``n_split_features`` candidate features without
    replacement. ``max_depth=None`` grows until leaves are pure or unsplittable.
    """
    d = X.shape[1]
    feature, threshold, left, right, value, impurity, n_samples = [], [], [], [], [], [], []

    def new_node(idx):
        counts = np.bincount(yi[idx], minlength=n_classes).astype(float)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(counts)
        impurity.append(gini(counts))
        n_samples.append(float(len(idx)))
        return len(feature) - 1

    root = new_node(np.arange(X.shape[0]))
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        if impurity[node] == 0.0 or len(idx) < 2 or (max_depth is not None and depth >= max_depth):
            continue
        if n_split_features >= d:
            feats = np.arange(d)
        else:
            feats = np.sort(rng.choice(d, size=n_split_features, replace=False))
        cost, f, thr = _best_split(X[idx], yi[idx], feats, n_classes)
        if f < 0:
            continue
        mask = X[idx, f] <= thr
        li = new_node(idx[mask])
        ri = new_node(idx[~mask])
        feature[node], threshold[node], left[node], right[node] = f, thr, li, ri
        # right pushed first so the left subtree is numbered first
        stack.append((ri, idx[~mask], depth + 1))
        stack.append((li, idx[mask], depth + 1))
    return DecisionTree(
        feature=np.asarray(feature, dtype=int),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=int),
        right=np.asarray(right, dtype=int),
        value=np.vstack(value),
        impurity=np.asarray(impurity, dtype=float),
        n_samples=np.asarray(n_samples, dtype=float),
    )


def n_split_features(rule: str, d: int) -> int:
    if rule == "all":
        return d
    return max(1, int(math.isqrt(d)))


def train_rf(X, y, cfg: TrainConfig | None = None, *, feature_names=None, stats=None) -> TrainedModel:
    """Bagged CART forest; tree ``t`` uses the generator seeded with ``rng_seed + t``."""
    cfg = replace(cfg or TrainConfig(), model_kind="rf")
    cfg.validate()
    X, yi, classes, names, stats = _prepare(X, y, feature_names, stats)
    n, d = X.shape
    m = n_split_features(cfg.features_per_split, d)
    trees = []
    for t in range(cfg.n_trees):
        rng = np.random.default_rng(cfg.rng_seed + t)
        idx = rng.integers(0, n, size=n) if cfg.bootstrap else np.arange(n)
        trees.append(fit_tree(X[idx], yi[idx], len(classes), cfg.max_depth, m, rng))
    return TrainedModel("rf", classes, names, stats, cfg, trees=tuple(trees))


_TRAINERS = {"logreg": train_logreg, "svm": train_svm, "rf": train_rf}


def train(X, y, cfg: TrainConfig, *, feature_names=None, stats=None) -> TrainedModel:
    cfg.validate()
    return _TRAINERS[cfg.model_kind](X, y, cfg, feature_names=feature_names, stats=stats)


# --- prediction -----------------------------------------------------------------


def _to_z(model: TrainedModel, x) -> np.ndarray:
    if isinstance(x, FeatureVector):
        x = x.values
    if isinstance(x, Mapping):
        missing = [n for n in model.feature_names if n not in x]
        if missing:
            raise KeyError(f"feature vector is missing model feature(s): {', '.join(missing)}")
        raw = np.array([float(x[n]) for n in model.feature_names])
        return model.stats.apply(raw)
    return np.asarray(x, dtype=float)


def predict_proba(model: TrainedModel, x) -> np.ndarray:
    """Class probabilities in the order of ``model.classes``.

    ``x`` may be a FeatureVector or name->value mapping of raw feature
    values (standardized with the model's stats), or an array of
    already-standardized rows.
    """
    z = _to_z(model, x)
    P = model.proba_z(z)
    return P[0] if z.ndim == 1 else P


def predict_label(model: TrainedModel, x):
    """Most probable level; ties go to the lower level."""
    P = predict_proba(model, x)
    idx = np.argmax(P, axis=-1)
    labels = np.asarray(model.classes)[idx]
    return int(labels) if np.ndim(labels) == 0 else labels


# --- persistence ----------------------------------------------------------------


def save_model(model: TrainedModel, path: str | Path, extra: Mapping | None = None) -> None:
    payload = {
        "version": FORMAT_VERSION,
        "kind": model.kind,
        "classes": list(model.classes),
        "feature_names": list(model.feature_names),
        "stats": model.stats.to_dict(),
        "config": asdict(model.config),
        "seed": model.config.rng_seed,
    }
    if model.kind == "rf":
        payload["trees"] = [t.to_dict() for t in model.trees]
    else:
        payload["weights"] = model.weights.tolist()
        payload["bias"] = model.bias.tolist()
    if extra:
        payload["extra"] = dict(extra)
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_model(path: str | Path) -> tuple[TrainedModel, dict]:
    """Returns the model and any ``extra`` payload saved alongside it."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported model file version {payload.get('version')!r}")
    kw = {}
    if payload["kind"] == "rf":
        kw["trees"] = tuple(DecisionTree.from_dict(t) for t in payload["trees"])
    else:
        kw["weights"] = np.asarray(payload["weights"], dtype=float)
        kw["bias"] = np.asarray(payload["bias"], dtype=float)
    model = TrainedModel(
        kind=payload["kind"],
        classes=tuple(payload["classes"]),
        feature_names=tuple(payload["feature_names"]),
        stats=StandardizationStats.from_dict(payload["stats"]),
        config=TrainConfig(**payload["config"]),
        **kw,
    )
    return model, payload.get("extra", {})
