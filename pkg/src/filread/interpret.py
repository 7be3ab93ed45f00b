"""Global interpretation: correlation ranking, learned weights, impurity importance.

Also holds the helpers used to compare feature selections: cross-level
intersection, order-preserving union and a Welch two-sample t-test.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.special import betainc

from .models import TrainedModel

__all__ = [
    "RankEntry",
    "FeatureRanking",
    "TTestResult",
    "average_ranks",
    "spearman_rho",
    "rank_by_spearman",
    "linear_global_weights",
    "linear_overall_ranking",
    "rf_global_importance",
    "rf_importances",
    "cross_reference_top",
    "combine_rankings",
    "two_sample_ttest",
    "write_rankings_csv",
    "format_spearman_table",
]

RANKING_SOURCES = ("spearman", "linear_weights", "rf_importance", "combined")


@dataclass(frozen=True)
class RankEntry:
    name: str
    score: float
    direction: str  # positive | negative | unsigned
    family: str = ""


@dataclass(frozen=True)
class FeatureRanking:
    entries: tuple[RankEntry, ...]
    source: str
    class_context: int | None = None

    def __post_init__(self):
        if self.source not in RANKING_SOURCES:
            raise ValueError(f"unknown ranking source {self.source!r}")
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("duplicate feature in ranking")

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def __len__(self):
        return len(self.entries)

    def top(self, k: int) -> "FeatureRanking":
        return FeatureRanking(self.entries[:k], self.source, self.class_context)


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    degrees_of_freedom: float
    p_value: float


def _direction(v: float) -> str:
    if v > 0:
        return "positive"
    if v < 0:
        return "negative"
    return "unsigned"


def _sorted_entries(items: Iterable[RankEntry]) -> tuple[RankEntry, ...]:
    # stable: equal magnitudes keep input (registry) order
    return tuple(sorted(items, key=lambda e: -abs(e.score)))


def _family_lookup(families) -> dict[str, str]:
    if families is None:
        return {}
    if hasattr(families, "entries"):
        return dict(families.entries)
    return dict(families)


# --- Spearman -------------------------------------------------------------------


def average_ranks(x) -> np.ndarray:
    """1-based ranks; tied values share the mean of their positions."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ranks = np.empty(len(x))
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman_rho(x, y) -> float:
    """Pearson correlation of tie-averaged ranks."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("spearman_rho needs two 1-D sequences of equal length")
    if len(x) < 3:
        raise ValueError("spearman_rho needs at least 3 observations")
    rx = average_ranks(x)
    ry = average_ranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    sxx = float(rx @ rx)
    syy = float(ry @ ry)
    if sxx == 0 or syy == 0:
        raise ValueError("spearman_rho is undefined for a constant input")
    rho = float(rx @ ry) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, rho))


def rank_by_spearman(X, y, k: int, feature_names: Sequence[str], families=None) -> FeatureRanking:
    """Top-k features by |rho| against the ordinal labels."""
    if k < 1:
        raise ValueError("k must be >= 1")
    X = np.asarray(X, dtype=float)
    fam = _family_lookup(families)
    entries = []
    for j, name in enumerate(feature_names):
        col = X[:, j]
        if np.all(col == col[0]):
            warnings.warn(f"skipping constant feature {name!r} in Spearman ranking", stacklevel=2)
            continue
        rho = spearman_rho(col, y)
        entries.append(RankEntry(name, rho, _direction(rho), fam.get(name, "")))
    if k > len(entries):
        warnings.warn(f"k={k} exceeds the {len(entries)} rankable features; returning all", stacklevel=2)
    return FeatureRanking(_sorted_entries(entries)[:k], "spearman")


# --- learned weights ----------------------------------------------------------------


def linear_global_weights(model: TrainedModel, k: int, families=None) -> list[FeatureRanking]:
    """Per-class rankings of a linear model's weights by magnitude, sign kept."""
    if model.kind not in ("logreg", "svm"):
        raise TypeError(f"linear_global_weights needs a logreg or svm model, got {model.kind!r}")
    fam = _family_lookup(families)
    out = []
    for ci, cls in enumerate(model.classes):
        w = model.weights[ci]
        entries = [
            RankEntry(name, float(v), _direction(v), fam.get(name, ""))
            for name, v in zip(model.feature_names, w)
            if v != 0
        ]
        if not entries:
            warnings.warn(f"class {cls}: all weights are zero, ranking is empty", stacklevel=2)
        out.append(FeatureRanking(_sorted_entries(entries)[:k], "linear_weights", class_context=cls))
    return out


def linear_overall_ranking(model: TrainedModel, k: int, families=None) -> FeatureRanking:
    """Single ranking for a linear model: each feature scored by its largest |weight| over classes."""
    if model.kind not in ("logreg", "svm"):
        raise TypeError(f"linear_overall_ranking needs a logreg or svm model, got {model.kind!r}")
    fam = _family_lookup(families)
    idx = np.argmax(np.abs(model.weights), axis=0)
    best = model.weights[idx, np.arange(model.n_features)]
    entries = [
        RankEntry(name, float(v), _direction(v), fam.get(name, ""))
        for name, v in zip(model.feature_names, best)
        if v != 0
    ]
    return FeatureRanking(_sorted_entries(entries)[:k], "linear_weights")


def rf_importances(model: TrainedModel) -> np.ndarray:
    """Mean decrease in Gini impurity, averaged over trees then normalized to 1."""
    if model.kind != "rf":
        raise TypeError(f"impurity importance needs a random forest, got {model.kind!r}")
    total = np.mean([t.impurity_decrease(model.n_features) for t in model.trees], axis=0)
    s = total.sum()
    if s <= 0:
        warnings.warn("forest has no splits; all importances are zero", stacklevel=2)
        return np.zeros(model.n_features)
    return total / s


def rf_global_importance(model: TrainedModel, k: int, X=None, y=None, families=None) -> FeatureRanking:
    """Top-k impurity importances.

    Importances are unsigned; when training data ``X, y`` is given each
    entry's direction is the sign of that feature's Spearman correlation.
    """
    imp = rf_importances(model)
    fam = _family_lookup(families)
    entries = []
    for j, name in enumerate(model.feature_names):
        direction = "unsigned"
        if X is not None and y is not None:
            col = np.asarray(X, dtype=float)[:, j]
            if not np.all(col == col[0]):
                direction = _direction(spearman_rho(col, y))
        entries.append(RankEntry(name, float(imp[j]), direction, fam.get(name, "")))
    return FeatureRanking(_sorted_entries(entries)[:k], "rf_importance")


# --- selection helpers --------------------------------------------------------------


def cross_reference_top(rankings: Sequence[FeatureRanking], k: int) -> list[str]:
    """Names present in the top-k of every ranking, in the first ranking's order."""
    if len(rankings) < 2:
        raise ValueError("cross_reference_top needs at least two rankings")
    if any(len(r) == 0 for r in rankings):
        raise ValueError("cannot cross-reference an empty ranking")
    common = set(rankings[0].names[:k])
    for r in rankings[1:]:
        common &= set(r.names[:k])
    return [n for n in rankings[0].names[:k] if n in common]


def combine_rankings(a: FeatureRanking | Sequence[str], b: FeatureRanking | Sequence[str]) -> list[str]:
    names_a = a.names if isinstance(a, FeatureRanking) else list(a)
    names_b = b.names if isinstance(b, FeatureRanking) else list(b)
    return list(dict.fromkeys([*names_a, *names_b]))


# --- significance -------------------------------------------------------------------


def two_sample_ttest(a, b) -> TTestResult:
    """Welch's unequal-variance t-test, two-tailed."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each sample needs at least 2 observations")
    va = a.var(ddof=1) / len(a)
    vb = b.var(ddof=1) / len(b)
    if va + vb == 0:
        raise ValueError("both samples have zero variance")
    t = (a.mean() - b.mean()) / math.sqrt(va + vb)
    df = (va + vb) ** 2 / (va**2 / (len(a) - 1) + vb**2 / (len(b) - 1))
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return TTestResult(float(t), float(df), min(1.0, max(0.0, p)))


# --- export -------------------------------------------------------------------------


def write_rankings_csv(path: str | Path, rankings: Sequence[FeatureRanking]) -> None:
    """One row per entry: ``rank,feature,family,score,direction,source,class``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "feature", "family", "score", "direction", "source", "class"])
        for r in rankings:
            for i, e in enumerate(r.entries, 1):
                cls = "" if r.class_context is None else r.class_context
                w.writerow([i, e.name, e.family, f"{e.score:.6f}", e.direction, r.source, cls])


def format_spearman_table(ranking: FeatureRanking) -> str:
    """Markdown table of (feature set, predictor, rho)."""
    lines = ["| Feature Set | Predictor | Spearman's rho |", "|---|---|---:|"]
    for e in ranking.entries:
        lines.append(f"| {e.family} | {e.name} | {e.score:.4f} |")
    return "\n".join(lines)
