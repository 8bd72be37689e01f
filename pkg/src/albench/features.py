"""Sparse n-gram features over post text.

Raw n-gram counts (n = 1..5 by default) with L2 normalization; no IDF
unless asked for, so a vector depends only on its own text and the
vocabulary. Vocabulary indices are assigned in lexicographic key order,
which makes builds reproducible across runs.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

VOCABULARY_SCHEMA_VERSION = 1

# Keep + # . _ - inside tokens so names like c++, c#, asp.net survive.
_TOKEN_SPLIT_RE = re.compile(r"[^a-z0-9+#._\-]+")


@dataclass(frozen=True)
class FeatureConfig:
    n_min: int = 1
    n_max: int = 5
    min_df: int = 2
    use_idf: bool = False
    # Question titles are folded into body_text at ingest time, so the
    # feature text is body_text (title included when the dump carried one).
    text_field: str = "body_text"

    def __post_init__(self):
        if not (1 <= self.n_min <= self.n_max):
            raise ValueError(f"need 1 <= n_min <= n_max, got {self.n_min}..{self.n_max}")
        if self.min_df < 1:
            raise ValueError(f"min_df must be >= 1, got {self.min_df}")


def tokenize(text: str) -> list[str]:
    """Lowercase and split; strips stray leading/trailing '.' and '-'."""
    tokens = []
    for raw in _TOKEN_SPLIT_RE.split(text.lower()):
        tok = raw.strip(".-")
        if tok:
            tokens.append(tok)
    return tokens


def extract_ngrams(tokens: Sequence[str], n_min: int = 1, n_max: int = 5) -> Counter:
    """All contiguous n-grams of length n_min..n_max, with multiplicities."""
    if not 1 <= n_min <= n_max:
        raise ValueError(f"need 1 <= n_min <= n_max, got {n_min}..{n_max}")
    grams: Counter = Counter()
    length = len(tokens)
    for n in range(n_min, min(n_max, length) + 1):
        for start in range(length - n + 1):
            grams[" ".join(tokens[start : start + n])] += 1
    return grams


@dataclass
class Vocabulary:
    """Immutable after build; maps n-gram strings to dense feature indices."""

    entries: dict[str, int]
    n_min: int
    n_max: int
    min_df: int
    doc_freq: dict[str, int] = field(default_factory=dict)
    n_docs: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    def idf(self, ngram: str) -> float:
        df = self.doc_freq.get(ngram, 0)
        return math.log((1 + self.n_docs) / (1 + df)) + 1.0

    def save(self, path: str | Path) -> None:
        header = {
            "schema_version": VOCABULARY_SCHEMA_VERSION,
            "n_min": self.n_min,
            "n_max": self.n_max,
            "min_df": self.min_df,
            "n_docs": self.n_docs,
        }
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(header, ensure_ascii=False) + "\n")
            for ngram, index in sorted(self.entries.items(), key=lambda kv: kv[1]):
                row = {"ngram": ngram, "index": index, "df": self.doc_freq.get(ngram, 0)}
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        with open(path, "r", encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            if header.get("schema_version") != VOCABULARY_SCHEMA_VERSION:
                raise ValueError(
                    f"vocabulary schema_version {header.get('schema_version')!r} unsupported"
                )
            entries: dict[str, int] = {}
            doc_freq: dict[str, int] = {}
            for line in fh:
                if not line.strip():
                    continue
                row = json.loads(line)
                entries[row["ngram"]] = row["index"]
                doc_freq[row["ngram"]] = row.get("df", 0)
        return cls(
            entries=entries,
            n_min=header["n_min"],
            n_max=header["n_max"],
            min_df=header["min_df"],
            doc_freq=doc_freq,
            n_docs=header.get("n_docs", 0),
        )


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def build_vocabulary(
    texts: Iterable[str], n_min: int = 1, n_max: int = 5, min_df: int = 2
) -> Vocabulary:
    """Collect n-grams appearing in at least ``min_df`` distinct documents.

    Built over labeled and unlabeled posts alike: the active-learning loop
    has to score the unlabeled pool in the same feature space.
    """
    doc_freq: Counter = Counter()
    n_docs = 0
    for text in texts:
        n_docs += 1
        doc_freq.update(set(extract_ngrams(tokenize(text), n_min, n_max)))
    if n_docs == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    kept = sorted(g for g, df in doc_freq.items() if df >= min_df)
    return Vocabulary(
        entries={g: i for i, g in enumerate(kept)},
        n_min=n_min,
        n_max=n_max,
        min_df=min_df,
        doc_freq={g: doc_freq[g] for g in kept},
        n_docs=n_docs,
    )


@dataclass(frozen=True)
class FeatureVector:
    """Sparse L2-normalized vector; ``norm`` is 1.0, or 0.0 when empty."""

    components: dict[int, float]
    norm: float


def vectorize(text: str, vocab: Vocabulary, use_idf: bool = False) -> FeatureVector:
    """Count in-vocabulary n-grams, then L2-normalize.

    Out-of-vocabulary n-grams are ignored; a document with none in the
    vocabulary yields the zero vector.
    """
    counts: dict[int, float] = {}
    for ngram, count in extract_ngrams(tokenize(text), vocab.n_min, vocab.n_max).items():
        index = vocab.entries.get(ngram)
        if index is None:
            continue
        weight = float(count)
        if use_idf:
            weight *= vocab.idf(ngram)
        counts[index] = weight
    if not counts:
        return FeatureVector(components={}, norm=0.0)
    scale = 1.0 / math.sqrt(sum(w * w for w in counts.values()))
    components = {i: w * scale for i, w in sorted(counts.items())}
    return FeatureVector(components=components, norm=1.0)
