"""Deterministic synthetic Filipino-like corpus with graded readability signal.

Documents are bags of lexicon words arranged into sentences. Higher
levels get longer sentences, more sentences, more polysyllabic words and
a larger vocabulary. Two non-monotone knobs (verb rate and loanword rate)
peak at level 2, giving the classifiers signal that a rank correlation
with the level cannot see.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import LEVELS, LabeledCorpus, is_syllabifiable, make_document, syllabify
from .features import load_lexicon

__all__ = ["SynthConfig", "generate_corpus", "write_corpus"]

Triple = tuple[float, float, float]


def _increasing(name: str, t) -> None:
    if not (t[0] < t[1] < t[2]):
        raise ValueError(f"{name} must increase strictly across levels 1-3, got {t}")


@dataclass(frozen=True)
class SynthConfig:
    docs_per_level: int = 100
    seed: int = 42
    mean_sentence_length: Triple = (5.0, 6.5, 8.0)
    sentences_per_doc: Triple = (4.0, 8.0, 12.0)
    polysyllable_rate: Triple = (0.01, 0.025, 0.04)
    vocabulary_richness: Triple = (0.35, 0.55, 0.8)
    verb_rate: Triple = (0.10, 0.20, 0.12)
    loanword_rate: Triple = (0.04, 0.10, 0.05)
    length_jitter: float = 0.25
    lexicon_path: str | None = None
    require_monotone: bool = field(default=True, compare=False)

    def validate(self) -> None:
        if self.docs_per_level < 2:
            raise ValueError("docs_per_level must be at least 2")
        if self.require_monotone:
            for name in ("mean_sentence_length", "sentences_per_doc", "polysyllable_rate", "vocabulary_richness"):
                _increasing(name, getattr(self, name))
        for name in ("polysyllable_rate", "vocabulary_richness", "verb_rate", "loanword_rate"):
            if not all(0 <= v <= 1 for v in getattr(self, name)):
                raise ValueError(f"{name} values must lie in [0, 1]")


def _pools(lexicon_path: str | None):
    tagger = load_lexicon(lexicon_path)
    words = sorted(w for w in tagger.lexicon if is_syllabifiable(w))
    syl = {w: len(syllabify(w)) for w in words}
    by_pos: dict[str, list[str]] = {}
    for w in words:
        by_pos.setdefault(tagger.lexicon[w], []).append(w)
    # shorter words first: they play the role of high-frequency vocabulary
    for pos in by_pos:
        by_pos[pos].sort(key=lambda w: (syl[w], w))
    content = [w for pos in ("noun", "adj", "adv") for w in by_pos.get(pos, []) if syl[w] < 6]
    content.sort(key=lambda w: (syl[w], w))
    poly = [w for w in words if syl[w] >= 6]
    loan = [w for w in words if any(c in "cfjqvxz" for c in w) or w.startswith(("pr", "tr", "kl", "gr", "br", "pl", "bl", "dr", "kr", "gl"))]
    return {
        "func": by_pos.get("func", []),
        "verb": by_pos.get("verb", []),
        "content": content,
        "poly": poly,
        "loan": loan,
    }


def _zipf_pick(rng: np.random.Generator, pool: list[str], richness: float) -> str:
    size = max(1, math.ceil(richness * len(pool)))
    ranks = np.arange(1, size + 1)
    p = 1.0 / ranks
    return pool[int(rng.choice(size, p=p / p.sum()))]


def _sentence(rng, pools, level_i: int, cfg: SynthConfig, length: int) -> str:
    richness = cfg.vocabulary_richness[level_i]
    words = []
    for _ in range(length):
        u = rng.random()
        if u < 0.3:
            words.append(_zipf_pick(rng, pools["func"], 1.0))
        elif u < 0.3 + cfg.verb_rate[level_i]:
            words.append(_zipf_pick(rng, pools["verb"], richness))
        elif rng.random() < cfg.polysyllable_rate[level_i] / 0.7:
            words.append(pools["poly"][int(rng.integers(len(pools["poly"])))])
        elif rng.random() < cfg.loanword_rate[level_i]:
            words.append(pools["loan"][int(rng.integers(len(pools["loan"])))])
        else:
            words.append(_zipf_pick(rng, pools["content"], richness))
    if length >= 6 and rng.random() < 0.5:
        cut = int(rng.integers(2, length - 2))
        words[cut] += ","
    words[0] = words[0][0].upper() + words[0][1:]
    end = rng.choice([".", ".", ".", "!", "?"])
    return " ".join(words) + end


def generate_corpus(cfg: SynthConfig | None = None) -> LabeledCorpus:
    """Build ``3 * docs_per_level`` documents, level by level, from one seeded stream."""
    cfg = cfg or SynthConfig()
    cfg.validate()
    pools = _pools(cfg.lexicon_path)
    rng = np.random.default_rng(cfg.seed)
    docs = []
    for li, level in enumerate(LEVELS):
        for i in range(cfg.docs_per_level):
            jitter = math.exp(rng.normal(0.0, cfg.length_jitter))
            mean_len = cfg.mean_sentence_length[li] * jitter
            n_sent = max(2, int(rng.poisson(cfg.sentences_per_doc[li] * math.exp(rng.normal(0.0, cfg.length_jitter)))))
            sents = [_sentence(rng, pools, li, cfg, max(2, int(rng.poisson(mean_len)))) for _ in range(n_sent)]
            docs.append(make_document(f"L{level}_{i:03d}", " ".join(sents) + "\n", level))
    return LabeledCorpus(tuple(docs))


def write_corpus(corpus: LabeledCorpus, out_dir: str | Path) -> Path:
    """Write ``docs/<id>.txt`` files and a ``manifest.csv``; returns the manifest path."""
    out = Path(out_dir)
    (out / "docs").mkdir(parents=True, exist_ok=True)
    manifest = out / "manifest.csv"
    with open(manifest, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "label"])
        for doc in corpus.documents:
            rel = f"docs/{doc.id}.txt"
            (out / rel).write_text(doc.text, encoding="utf-8")
            w.writerow([rel, doc.label])
    return manifest
