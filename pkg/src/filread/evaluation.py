"""Stratified splitting and the accuracy / weighted P-R-F1 metric suite."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import LEVELS, LabeledCorpus

__all__ = [
    "ConfusionMatrix",
    "MetricsReport",
    "stratified_split",
    "confusion_matrix",
    "compute_metrics",
    "write_metrics_csv",
    "metrics_markdown",
]


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are gold levels, columns predicted levels, both in ``labels`` order."""

    counts: np.ndarray
    labels: tuple[int, ...] = LEVELS

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float

    def as_row(self) -> list[str]:
        return [f"{v:.4f}" for v in (self.accuracy, self.precision, self.recall, self.f1)]


def stratified_split(corpus: LabeledCorpus, test_fraction: float = 0.3, seed: int = 42) -> tuple[LabeledCorpus, LabeledCorpus]:
    """Per-level seeded shuffle; each level contributes ``round(n * fraction)`` test docs.

    Both halves keep the corpus order of their documents.
    """
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    test_idx: list[int] = []
    for level in sorted({d.label for d in corpus.documents}):
        idx = [i for i, d in enumerate(corpus.documents) if d.label == level]
        if len(idx) < 2:
            raise ValueError(f"level {level} has {len(idx)} document(s); at least 2 are needed to split")
        n_test = min(len(idx) - 1, max(1, math.floor(len(idx) * test_fraction + 0.5)))
        perm = rng.permutation(len(idx))
        test_idx.extend(idx[p] for p in perm[:n_test])
    test_set = set(test_idx)
    train = [i for i in range(len(corpus)) if i not in test_set]
    return corpus.subset(train), corpus.subset(sorted(test_set))


def confusion_matrix(golds: Sequence[int], preds: Sequence[int], labels: Sequence[int] = LEVELS) -> ConfusionMatrix:
    if len(golds) != len(preds):
        raise ValueError(f"{len(golds)} gold labels but {len(preds)} predictions")
    pos = {lab: i for i, lab in enumerate(labels)}
    m = np.zeros((len(labels), len(labels)), dtype=int)
    for g, p in zip(golds, preds):
        m[pos[int(g)], pos[int(p)]] += 1
    return ConfusionMatrix(m, tuple(labels))


def compute_metrics(golds: Sequence[int], preds: Sequence[int]) -> MetricsReport:
    """Accuracy plus support-weighted precision, recall and F1."""
    if len(golds) != len(preds):
        raise ValueError(f"{len(golds)} gold labels but {len(preds)} predictions")
    if len(golds) == 0:
        raise ValueError("no predictions to score")
    labels = tuple(sorted({int(v) for v in golds} | {int(v) for v in preds} | set(LEVELS)))
    cm = confusion_matrix(golds, preds, labels).counts
    tp = np.diag(cm).astype(float)
    support = cm.sum(axis=1).astype(float)
    predicted = cm.sum(axis=0).astype(float)
    n = float(cm.sum())
    prec = np.zeros(len(labels))
    rec = np.zeros(len(labels))
    f1 = np.zeros(len(labels))
    for i, lab in enumerate(labels):
        if support[i] == 0:
            continue
        if predicted[i] == 0:
            warnings.warn(f"level {lab} was never predicted; its precision is set to 0", stacklevel=2)
        else:
            prec[i] = tp[i] / predicted[i]
        rec[i] = tp[i] / support[i]
        if prec[i] + rec[i] > 0:
            f1[i] = 2 * prec[i] * rec[i] / (prec[i] + rec[i])
    w = support / n
    accuracy = float(tp.sum() / n)
    return MetricsReport(
        accuracy=accuracy,
        precision=float(w @ prec),
        # sum_i (support_i / n) * (tp_i / support_i) is exactly sum_i tp_i / n
        recall=accuracy,
        f1=float(w @ f1),
    )


def write_metrics_csv(path: str | Path, rows: Sequence[tuple[str, MetricsReport]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "accuracy", "precision", "recall", "f1"])
        for name, rep in rows:
            w.writerow([name, *rep.as_row()])


def metrics_markdown(rows: Sequence[tuple[str, MetricsReport]]) -> str:
    lines = ["| Model | Acc | Prec | Rec | F1 |", "|---|---:|---:|---:|---:|"]
    for name, rep in rows:
        lines.append(f"| {name} | " + " | ".join(f"{v:.3f}" for v in (rep.accuracy, rep.precision, rep.recall, rep.f1)) + " |")
    return "\n".join(lines)
