"""Document ingestion, tokenization and Filipino syllabification.

The tokenizer and syllabifier are rule-based approximations: vowels are
``a e i o u``, ``ng`` is a single consonant unit, and syllables are built
with a maximal-onset rule over a small permissible-onset inventory.
"""

from __future__ import annotations

import csv
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

__all__ = [
    "CorpusError",
    "Document",
    "LabeledCorpus",
    "Syllable",
    "LEVELS",
    "VOWELS",
    "make_document",
    "load_corpus",
    "tokenize",
    "split_sentences",
    "syllabify",
    "classify_syllable_pattern",
    "graphemes",
    "is_syllabifiable",
]

LEVELS = (1, 2, 3)
VOWELS = frozenset("aeiou")
# obstruents that may precede r/l in a two-consonant onset
_CLUSTER_HEADS = frozenset("bcdfgkpstvz")

_TOKEN_RE = re.compile(r"[^\W_]+(?:-[^\W_]+)*")
_SENTENCE_END_RE = re.compile(r"(?<=[.!?])\s+")


class CorpusError(ValueError):
    """Raised for unreadable manifests, bad labels or untokenizable text."""


@dataclass(frozen=True)
class Syllable:
    text: str
    pattern: str


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    tokens: tuple[str, ...]
    sentences: tuple[tuple[str, ...], ...]
    label: int

    def __post_init__(self):
        if self.label not in LEVELS:
            raise CorpusError(f"document {self.id!r}: label {self.label!r} not in {LEVELS}")
        if not self.tokens:
            raise CorpusError(f"document {self.id!r} has no word tokens")


@dataclass(frozen=True)
class LabeledCorpus:
    documents: tuple[Document, ...]
    level_counts: dict[int, int] = field(init=False)

    def __post_init__(self):
        counts = Counter(d.label for d in self.documents)
        object.__setattr__(self, "level_counts", {lvl: counts.get(lvl, 0) for lvl in LEVELS})

    def __len__(self):
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    @property
    def labels(self) -> list[int]:
        return [d.label for d in self.documents]

    def by_level(self, level: int) -> list[Document]:
        return [d for d in self.documents if d.label == level]

    def subset(self, indices: Iterable[int]) -> "LabeledCorpus":
        return LabeledCorpus(tuple(self.documents[i] for i in indices))


def _check_text(text: str) -> None:
    if not text or not text.strip():
        raise CorpusError("text is empty")


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens; punctuation dropped, intra-word hyphens kept.

    Digit runs come out as their own tokens (``"3"``); they are counted as
    words but skipped by the syllable-based features.
    """
    _check_text(text)
    return _TOKEN_RE.findall(text.lower())


def split_sentences(text: str) -> list[str]:
    """Split on ``.``, ``!`` or ``?`` followed by whitespace or end of text.

    A trailing fragment without terminal punctuation is kept as a sentence.
    """
    _check_text(text)
    return [s.strip() for s in _SENTENCE_END_RE.split(text.strip()) if s.strip()]


def make_document(doc_id: str, text: str, label: int) -> Document:
    sentences = []
    for sent in split_sentences(text):
        toks = tokenize(sent)
        if toks:
            sentences.append(tuple(toks))
    tokens = tuple(t for s in sentences for t in s)
    return Document(id=doc_id, text=text, tokens=tokens, sentences=tuple(sentences), label=label)


def load_corpus(manifest_path: str | Path) -> LabeledCorpus:
    """Read a ``path,label`` CSV manifest; paths resolve relative to it."""
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise CorpusError(f"manifest not found: {manifest_path}")
    base = manifest_path.parent
    docs = []
    with open(manifest_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["path", "label"]:
            raise CorpusError(f"{manifest_path}: header must be 'path,label'")
        for row_no, row in enumerate(reader):
            rel = (row["path"] or "").strip()
            try:
                label = int((row["label"] or "").strip())
            except ValueError:
                raise CorpusError(f"{manifest_path} row {row_no + 1}: bad label {row['label']!r}") from None
            if label not in LEVELS:
                raise CorpusError(f"{manifest_path} row {row_no + 1}: label {label} not in {LEVELS}")
            doc_path = Path(rel) if Path(rel).is_absolute() else base / rel
            try:
                text = doc_path.read_text(encoding="utf-8")
            except (OSError, UnicodeDecodeError) as exc:
                raise CorpusError(f"cannot read document {doc_path}: {exc}") from exc
            # row number keeps ids distinct when a file is listed twice
            doc_id = f"{row_no:04d}:{Path(rel).stem}"
            try:
                docs.append(make_document(doc_id, text, label))
            except CorpusError as exc:
                raise CorpusError(f"{doc_path}: {exc}") from exc
    if not docs:
        raise CorpusError(f"{manifest_path}: manifest lists no documents")
    return LabeledCorpus(tuple(docs))


def _base_letter(ch: str) -> str:
    return unicodedata.normalize("NFD", ch)[0].lower()


def graphemes(word: str) -> list[str]:
    """Split an alphabetic word into letter units, joining ``ng``."""
    units = []
    i = 0
    while i < len(word):
        if word[i : i + 2].lower() == "ng":
            units.append(word[i : i + 2])
            i += 2
        else:
            units.append(word[i])
            i += 1
    return units


def _is_vowel(unit: str) -> bool:
    return len(unit) == 1 and _base_letter(unit) in VOWELS


def _permissible_onset(cluster: list[str]) -> bool:
    if len(cluster) <= 1:
        return True
    if len(cluster) == 2:
        a, b = (u.lower() for u in cluster)
        if a == "t" and b == "s":
            return True
        return a in _CLUSTER_HEADS and b in ("r", "l")
    return False


def is_syllabifiable(token: str) -> bool:
    parts = token.split("-")
    return all(p.isalpha() and any(_is_vowel(u) for u in graphemes(p)) for p in parts)


def _syllabify_part(word: str) -> list[Syllable]:
    if not word.isalpha():
        raise ValueError(f"cannot syllabify non-alphabetic word {word!r}")
    units = graphemes(word)
    nuclei = [i for i, u in enumerate(units) if _is_vowel(u)]
    if not nuclei:
        raise ValueError(f"word {word!r} has no vowel")
    # starts[k] = index of the first unit of syllable k
    starts = [0]
    for prev, nxt in zip(nuclei, nuclei[1:]):
        cluster = units[prev + 1 : nxt]
        onset = 0
        for n in range(len(cluster), 0, -1):
            if _permissible_onset(cluster[len(cluster) - n :]):
                onset = n
                break
        starts.append(nxt - onset)
    starts.append(len(units))
    out = []
    for a, b in zip(starts, starts[1:]):
        text = "".join(units[a:b])
        out.append(Syllable(text, classify_syllable_pattern(text)))
    return out


def syllabify(word: str) -> list[Syllable]:
    """Maximal-onset syllabification; hyphenated parts are handled separately.

    >>> [s.text for s in syllabify("ngayon")]
    ['nga', 'yon']
    """
    if not word:
        raise ValueError("empty word")
    out: list[Syllable] = []
    for part in word.split("-"):
        out.extend(_syllabify_part(part))
    return out


def classify_syllable_pattern(syllable: str) -> str:
    """Map each vowel to ``v`` and each consonant unit (``ng`` included) to ``c``."""
    return "".join("v" if _is_vowel(u) else "c" for u in graphemes(syllable))
