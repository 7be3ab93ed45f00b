"""Linguistic feature extraction for readability assessment.

Five families are computed per document:

* TRAD  - surface counts and averages
* LEX   - type-token ratio variants and part-of-speech densities
* LM    - perplexity under per-level n-gram models
* SYLL  - syllable-pattern densities
* MORPH - verb focus/aspect/mood frequencies from an affix rule table
"""

from __future__ import annotations

import csv
import math
import re
import warnings
from dataclasses import dataclass, field
from importlib import resources as _res
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import Document, is_syllabifiable, syllabify
from .lm import NgramModel, perplexity_sentences

__all__ = [
    "FAMILIES",
    "SYLL_PATTERNS",
    "MORPH_CATEGORIES",
    "LM_LEVELS",
    "LM_ORDERS",
    "FeatureRegistry",
    "FeatureVector",
    "StandardizationStats",
    "LexiconTagger",
    "AffixTable",
    "Resources",
    "default_registry",
    "load_lexicon",
    "load_affix_table",
    "lm_feature_name",
    "extract_trad",
    "extract_lex",
    "extract_syll",
    "extract_lm",
    "extract_morph",
    "morph_counts",
    "extract_all",
    "feature_matrix",
    "standardize",
    "write_feature_csv",
    "read_feature_csv",
]

FAMILIES = ("TRAD", "LEX", "LM", "SYLL", "MORPH")
TRAD_FEATURES = (
    "word_count",
    "sentence_count",
    "phrase_count",
    "polysyll_count",
    "avg_word_length",
    "avg_sentence_length",
    "avg_syllables_per_word",
)
LEX_FEATURES = (
    "ttr",
    "root_ttr",
    "corr_ttr",
    "bilog_ttr",
    "noun_token_ratio",
    "verb_token_ratio",
    "lexical_density",
    "foreign_word_density",
    "compound_word_density",
)
LM_LEVELS = ("L1", "L2", "L3")
LM_ORDERS = (1, 2, 3)
_ORDER_NAMES = {1: "unigram", 2: "bigram", 3: "trigram"}
SYLL_PATTERNS = ("v", "cv", "vc", "vcc", "cvc", "cvcc", "ccvc", "ccvcc", "ccvccc")
SYLL_FEATURES = tuple(f"{p}_density" for p in SYLL_PATTERNS) + ("other_syll_density",)
MORPH_CATEGORIES = (
    "actor_focus",
    "object_focus",
    "benefactive_focus",
    "locative_focus",
    "instrumental_focus",
    "aspect_completed",
    "aspect_incompleted",
    "aspect_contemplated",
    "aspect_recently_completed",
    "mood_indicative",
    "mood_imperative",
)
POLYSYLLABLE_MIN = 6
CONTENT_POS = frozenset({"noun", "verb", "adj", "adv"})
FOREIGN_LETTERS = frozenset("cfjqvxz")
_PHRASE_SPLIT_RE = re.compile(r"[.,;:!?()\[\]\"“”]+")


def lm_feature_name(level: str, order: int) -> str:
    return f"{level}_{_ORDER_NAMES[order]}"


LM_FEATURES = tuple(lm_feature_name(lv, o) for lv in LM_LEVELS for o in LM_ORDERS)
_FAMILY_FEATURES = {
    "TRAD": TRAD_FEATURES,
    "LEX": LEX_FEATURES,
    "LM": LM_FEATURES,
    "SYLL": SYLL_FEATURES,
    "MORPH": MORPH_CATEGORIES,
}


@dataclass(frozen=True)
class FeatureRegistry:
    """Ordered (name, family) pairs defining the columns of a feature matrix."""

    entries: tuple[tuple[str, str], ...]

    def __post_init__(self):
        names = [n for n, _ in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        bad = {f for _, f in self.entries} - set(FAMILIES)
        if bad:
            raise ValueError(f"unknown feature families: {sorted(bad)}")

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.entries]

    @property
    def families(self) -> list[str]:
        return list(dict.fromkeys(f for _, f in self.entries))

    def family_of(self, name: str) -> str:
        for n, f in self.entries:
            if n == name:
                return f
        raise KeyError(name)

    def __len__(self):
        return len(self.entries)

    def select_families(self, families: Sequence[str]) -> "FeatureRegistry":
        wanted = {f.upper() for f in families}
        unknown = wanted - set(FAMILIES)
        if unknown:
            raise ValueError(f"unknown feature families: {sorted(unknown)}")
        return FeatureRegistry(tuple(e for e in self.entries if e[1] in wanted))

    def subset(self, names: Sequence[str]) -> "FeatureRegistry":
        fam = dict(self.entries)
        missing = [n for n in names if n not in fam]
        if missing:
            raise KeyError(f"features not in registry: {missing}")
        return FeatureRegistry(tuple((n, fam[n]) for n in names))


def default_registry() -> FeatureRegistry:
    """The 46 predictors implemented here, in family order."""
    return FeatureRegistry(tuple((n, fam) for fam in FAMILIES for n in _FAMILY_FEATURES[fam]))


@dataclass(frozen=True)
class FeatureVector:
    doc_id: str
    values: dict[str, float]

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def as_array(self, names: Sequence[str]) -> np.ndarray:
        missing = [n for n in names if n not in self.values]
        if missing:
            raise KeyError(f"feature vector {self.doc_id!r} is missing {missing}")
        return np.array([self.values[n] for n in names], dtype=float)


@dataclass(frozen=True)
class StandardizationStats:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        safe = np.where(self.std > 0, self.std, 1.0)
        Z = (X - self.mean) / safe
        return np.where(self.std > 0, Z, 0.0)

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: Mapping) -> "StandardizationStats":
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["std"], dtype=float))

    @classmethod
    def identity(cls, n_features: int) -> "StandardizationStats":
        return cls(np.zeros(n_features), np.ones(n_features))


def standardize(X, stats: StandardizationStats | None = None) -> tuple[np.ndarray, StandardizationStats]:
    """Z-score columns with population statistics; constant columns become 0."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("standardize expects a non-empty 2-D matrix")
    if stats is None:
        stats = StandardizationStats(X.mean(axis=0), X.std(axis=0))
    return stats.apply(X), stats


# --- resources --------------------------------------------------------------


def _data_path(name: str):
    return _res.files("filread").joinpath("data", name)


@dataclass(frozen=True)
class LexiconTagger:
    """Lexicon lookup with an affix heuristic for unknown words."""

    lexicon: Mapping[str, str]
    compounds: frozenset[str] = frozenset()

    _VERB_RE = re.compile(r"^(um|mag|nag|mang|nang|in)[a-z]|^[b-df-hj-np-tv-z](um|in)[aeiou]")
    _NOUN_RE = re.compile(r"^(pang|pam|pan)[a-z]{2,}|^ka[a-z]+an$")

    def tag(self, token: str) -> str:
        pos = self.lexicon.get(token)
        if pos is not None:
            return pos
        if self._VERB_RE.search(token):
            return "verb"
        if self._NOUN_RE.search(token):
            return "noun"
        return "unk"

    def __contains__(self, token: str) -> bool:
        return token in self.lexicon


def load_lexicon(path: str | Path | None = None) -> LexiconTagger:
    """Read a ``word<TAB>pos<TAB>compound`` file (bundled lexicon by default)."""
    src = _data_path("lexicon.tsv") if path is None else Path(path)
    lex: dict[str, str] = {}
    compounds = set()
    with src.open(encoding="utf-8") as fh:
        for row in csv.DictReader(fh, delimiter="\t"):
            w = row["word"].strip().lower()
            lex[w] = row["pos"].strip()
            if row.get("compound", "0").strip() == "1":
                compounds.add(w)
    return LexiconTagger(lex, frozenset(compounds))


@dataclass(frozen=True)
class _Rule:
    include: re.Pattern | None
    refs: tuple[str, ...]
    exclude: re.Pattern | None
    exclude_refs: tuple[str, ...]


def _parse_rule_field(text: str) -> tuple[re.Pattern | None, tuple[str, ...]]:
    text = text.strip()
    if not text:
        return None, ()
    if text.startswith("@"):
        return None, tuple(p.strip()[1:] for p in text.split("|"))
    return re.compile(text), ()


@dataclass(frozen=True)
class AffixTable:
    """Regex rules mapping a token to verb-inflection categories.

    Rows with the same category are OR-ed. A field may instead reference
    other categories as ``@name|@other``.
    """

    rules: dict[str, tuple[_Rule, ...]]

    def matches(self, token: str, category: str, _stack: tuple[str, ...] = ()) -> bool:
        if category in _stack:
            raise ValueError(f"cyclic affix rule reference through {category!r}")
        stack = _stack + (category,)
        for rule in self.rules.get(category, ()):
            hit = (rule.include is not None and rule.include.search(token) is not None) or any(
                self.matches(token, r, stack) for r in rule.refs
            )
            if not hit:
                continue
            if rule.exclude is not None and rule.exclude.search(token):
                continue
            if any(self.matches(token, r, stack) for r in rule.exclude_refs):
                continue
            return True
        return False

    def categories_of(self, token: str) -> list[str]:
        return [c for c in self.rules if self.matches(token, c)]


def load_affix_table(path: str | Path | None = None) -> AffixTable:
    src = _data_path("affixes.tsv") if path is None else Path(path)
    rules: dict[str, list[_Rule]] = {}
    with src.open(encoding="utf-8") as fh:
        for row in csv.DictReader(fh, delimiter="\t"):
            inc, refs = _parse_rule_field(row["include"])
            exc, exc_refs = _parse_rule_field(row.get("exclude") or "")
            rules.setdefault(row["category"].strip(), []).append(_Rule(inc, refs, exc, exc_refs))
    known = set(rules)
    for rs in rules.values():
        for r in rs:
            for ref in r.refs + r.exclude_refs:
                if ref not in known:
                    raise ValueError(f"affix table references unknown category {ref!r}")
    return AffixTable({k: tuple(v) for k, v in rules.items()})


@dataclass
class Resources:
    """Everything extract_all needs besides the document itself."""

    tagger: LexiconTagger
    affix_table: AffixTable
    lms: dict[tuple[str, int], NgramModel] = field(default_factory=dict)
    registry: FeatureRegistry = field(default_factory=default_registry)

    @classmethod
    def default(cls, lms=None, registry: FeatureRegistry | None = None) -> "Resources":
        return cls(load_lexicon(), load_affix_table(), dict(lms or {}), registry or default_registry())


# --- family extractors ------------------------------------------------------


def _syllable_counts(tokens: Sequence[str]) -> list[int]:
    return [len(syllabify(t)) for t in tokens if is_syllabifiable(t)]


def extract_trad(doc: Document) -> dict[str, float]:
    tokens = doc.tokens
    n_words = len(tokens)
    n_sent = len(doc.sentences)
    phrases = [c for c in _PHRASE_SPLIT_RE.split(doc.text) if re.search(r"[^\W_]", c)]
    syl = _syllable_counts(tokens)
    return {
        "word_count": float(n_words),
        "sentence_count": float(n_sent),
        "phrase_count": float(len(phrases)),
        "polysyll_count": float(sum(1 for s in syl if s >= POLYSYLLABLE_MIN)),
        "avg_word_length": sum(len(t.replace("-", "")) for t in tokens) / n_words,
        "avg_sentence_length": n_words / n_sent,
        "avg_syllables_per_word": (sum(syl) / len(syl)) if syl else 0.0,
    }


def extract_lex(doc: Document, tagger: LexiconTagger) -> dict[str, float]:
    tokens = doc.tokens
    n = len(tokens)
    types = len(set(tokens))
    if n > 1:
        bilog = math.log(types) / math.log(n)
    else:
        warnings.warn(f"document {doc.id!r}: bilog_ttr undefined for one token, using 0", stacklevel=2)
        bilog = 0.0
    tags = [tagger.tag(t) for t in tokens]
    foreign = sum(1 for t in tokens if (set(t) & FOREIGN_LETTERS) or t not in tagger)
    compound = sum(1 for t in tokens if "-" in t or t in tagger.compounds)
    return {
        "ttr": types / n,
        "root_ttr": types / math.sqrt(n),
        "corr_ttr": types / math.sqrt(2 * n),
        "bilog_ttr": bilog,
        "noun_token_ratio": tags.count("noun") / n,
        "verb_token_ratio": tags.count("verb") / n,
        "lexical_density": sum(1 for t in tags if t in CONTENT_POS) / n,
        "foreign_word_density": foreign / n,
        "compound_word_density": compound / n,
    }


def extract_syll(doc: Document) -> dict[str, float]:
    """Share of all syllables falling in each tracked c/v pattern."""
    patterns = [s.pattern for t in doc.tokens if is_syllabifiable(t) for s in syllabify(t)]
    if not patterns:
        raise ValueError(f"document {doc.id!r} has no syllabifiable words")
    total = len(patterns)
    out = {f"{p}_density": patterns.count(p) / total for p in SYLL_PATTERNS}
    tracked = sum(patterns.count(p) for p in SYLL_PATTERNS)
    out["other_syll_density"] = (total - tracked) / total
    return out


def extract_lm(doc: Document, models: Mapping[tuple[str, int], NgramModel]) -> dict[str, float]:
    out = {}
    for level in LM_LEVELS:
        for order in LM_ORDERS:
            model = models.get((level, order))
            if model is None:
                raise KeyError(f"no language model for level {level} order {order}")
            out[lm_feature_name(level, order)] = perplexity_sentences(model, doc.sentences)
    return out


def morph_counts(tokens: Sequence[str], table: AffixTable, tagger: LexiconTagger | None = None) -> dict[str, int]:
    """Raw per-category match counts.

    With a tagger, only tokens tagged ``verb`` (or unknown to it) are
    matched, which keeps nouns such as *tinapay* out of the counts.
    """
    counts = dict.fromkeys(MORPH_CATEGORIES, 0)
    for tok in tokens:
        if tagger is not None and tagger.tag(tok) not in ("verb", "unk"):
            continue
        for cat in MORPH_CATEGORIES:
            if table.matches(tok, cat):
                counts[cat] += 1
    return counts


def extract_morph(doc: Document, table: AffixTable, tagger: LexiconTagger | None = None) -> dict[str, float]:
    n = len(doc.tokens)
    return {k: v / n for k, v in morph_counts(doc.tokens, table, tagger).items()}


def extract_all(doc: Document, resources: Resources) -> FeatureVector:
    reg = resources.registry
    fams = set(reg.families)
    values: dict[str, float] = {}
    if "TRAD" in fams:
        values.update(extract_trad(doc))
    if "LEX" in fams:
        values.update(extract_lex(doc, resources.tagger))
    if "LM" in fams:
        values.update(extract_lm(doc, resources.lms))
    if "SYLL" in fams:
        values.update(extract_syll(doc))
    if "MORPH" in fams:
        values.update(extract_morph(doc, resources.affix_table, resources.tagger))
    out = {}
    for name in reg.names:
        v = float(values[name])
        if not math.isfinite(v):
            raise ValueError(f"document {doc.id!r}: feature {name} is not finite ({v})")
        out[name] = v
    return FeatureVector(doc.id, out)


def feature_matrix(vectors: Sequence[FeatureVector], names: Sequence[str]) -> np.ndarray:
    return np.vstack([v.as_array(names) for v in vectors]) if vectors else np.zeros((0, len(names)))


def write_feature_csv(path: str | Path, vectors: Sequence[FeatureVector], labels: Sequence[int], registry: FeatureRegistry) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["doc_id", "label", *registry.names])
        for vec, lab in zip(vectors, labels):
            w.writerow([vec.doc_id, lab, *(repr(vec.values[n]) for n in registry.names)])


def read_feature_csv(path: str | Path) -> tuple[list[FeatureVector], list[int], list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["doc_id", "label"]:
            raise ValueError(f"{path}: expected 'doc_id,label,...' header")
        names = header[2:]
        vecs, labels = [], []
        for row in reader:
            vecs.append(FeatureVector(row[0], {n: float(x) for n, x in zip(names, row[2:])}))
            labels.append(int(row[1]))
    return vecs, labels, names
