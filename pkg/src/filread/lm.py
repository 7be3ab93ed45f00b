"""Add-alpha smoothed n-gram language models and perplexity scoring."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

__all__ = [
    "BOS",
    "EOS",
    "UNK",
    "NgramModel",
    "train_ngram",
    "perplexity",
    "perplexity_sentences",
    "save_models",
    "load_models",
]

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
FORMAT_VERSION = 1
LEVEL_TAGS = ("L1", "L2", "L3")


@dataclass(frozen=True)
class NgramModel:
    """Count-based model; ``vocabulary`` is the set of predictable tokens.

    For order 1 the vocabulary is the observed tokens plus ``<unk>``. Higher
    orders also predict the end marker, so ``</s>`` is part of it.
    """

    order: int
    level_tag: str
    ngram_counts: dict[tuple[str, ...], int]
    context_counts: dict[tuple[str, ...], int]
    vocabulary: frozenset[str]
    smoothing_alpha: float = 1.0

    def _map(self, tok: str) -> str:
        if tok in (BOS, EOS) or tok in self.vocabulary:
            return tok
        return UNK

    def prob(self, word: str, context: Sequence[str] = ()) -> float:
        """Smoothed P(word | context); both are mapped to the vocabulary first."""
        ctx = tuple(self._map(t) for t in context)[-(self.order - 1) :] if self.order > 1 else ()
        w = self._map(word)
        num = self.ngram_counts.get(ctx + (w,), 0) + self.smoothing_alpha
        den = self.context_counts.get(ctx, 0) + self.smoothing_alpha * len(self.vocabulary)
        return num / den

    def to_dict(self) -> dict:
        return {
            "version": FORMAT_VERSION,
            "order": self.order,
            "level_tag": self.level_tag,
            "alpha": self.smoothing_alpha,
            "vocabulary": sorted(self.vocabulary),
            "ngram_counts": [[list(k), v] for k, v in sorted(self.ngram_counts.items())],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NgramModel":
        if data.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported n-gram model version {data.get('version')!r}")
        counts = {tuple(k): int(v) for k, v in data["ngram_counts"]}
        return cls(
            order=int(data["order"]),
            level_tag=data["level_tag"],
            ngram_counts=counts,
            context_counts=_context_counts(counts),
            vocabulary=frozenset(data["vocabulary"]),
            smoothing_alpha=float(data["alpha"]),
        )


def _pad(tokens: Sequence[str], order: int) -> list[str]:
    if order == 1:
        return list(tokens)
    return [BOS] * (order - 1) + list(tokens) + [EOS]


def _context_counts(ngram_counts: dict[tuple[str, ...], int]) -> dict[tuple[str, ...], int]:
    ctx: Counter = Counter()
    for gram, c in ngram_counts.items():
        ctx[gram[:-1]] += c
    return dict(ctx)


def train_ngram(texts: Iterable[Sequence[str]], order: int, alpha: float = 1.0, level_tag: str = "L1") -> NgramModel:
    """Count n-grams over sentence token lists.

    Orders 2 and 3 pad each sentence with ``order - 1`` start markers and
    one end marker; unigram models count the bare tokens.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order!r}")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    texts = [list(t) for t in texts]
    if not texts or not any(texts):
        raise ValueError("no training text")
    counts: Counter = Counter()
    observed: set[str] = set()
    for sent in texts:
        if not sent:
            continue
        observed.update(sent)
        padded = _pad(sent, order)
        for i in range(order - 1, len(padded)):
            counts[tuple(padded[i - order + 1 : i + 1])] += 1
    vocab = observed | {UNK}
    if order > 1:
        vocab.add(EOS)
    counts = dict(counts)
    return NgramModel(order, level_tag, counts, _context_counts(counts), frozenset(vocab), float(alpha))


def _log_likelihood(model: NgramModel, tokens: Sequence[str]) -> tuple[float, int]:
    padded = [model._map(t) for t in _pad(tokens, model.order)]
    total = 0.0
    n = 0
    for i in range(model.order - 1, len(padded)):
        total += math.log(model.prob(padded[i], padded[i - model.order + 1 : i]))
        n += 1
    return total, n


def perplexity(model: NgramModel, tokens: Sequence[str]) -> float:
    """exp of the mean negative log-probability over scored positions."""
    if not tokens:
        raise ValueError("cannot score an empty token list")
    ll, n = _log_likelihood(model, tokens)
    return math.exp(-ll / n)


def perplexity_sentences(model: NgramModel, sentences: Sequence[Sequence[str]]) -> float:
    """Perplexity of a multi-sentence document, each sentence padded separately."""
    ll = 0.0
    n = 0
    for sent in sentences:
        if sent:
            a, b = _log_likelihood(model, sent)
            ll += a
            n += b
    if n == 0:
        raise ValueError("cannot score an empty document")
    return math.exp(-ll / n)


def save_models(models: dict[tuple[str, int], NgramModel], path: str | Path) -> None:
    payload = {"version": FORMAT_VERSION, "models": [models[k].to_dict() for k in sorted(models)]}
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_models(path: str | Path) -> dict[tuple[str, int], NgramModel]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported n-gram bundle version {payload.get('version')!r}")
    out = {}
    for d in payload["models"]:
        m = NgramModel.from_dict(d)
        out[(m.level_tag, m.order)] = m
    return out
