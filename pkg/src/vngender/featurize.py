"""Token vocabularies and sparse count / TF-IDF feature vectors."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import FeaturizeError

VECTORIZER_MODES = ("count", "tfidf")


@dataclass(frozen=True, eq=False)
class SparseVector:
    """Sorted (index, weight) pairs; zero weights are never stored."""

    indices: np.ndarray  # int64, strictly increasing
    values: np.ndarray   # float64

    @staticmethod
    def from_pairs(pairs: Iterable[tuple[int, float]]) -> "SparseVector":
        agg: dict[int, float] = {}
        for idx, weight in pairs:
            agg[int(idx)] = agg.get(int(idx), 0.0) + float(weight)
        items = sorted((i, w) for i, w in agg.items() if w != 0.0)
        indices = np.array([i for i, _ in items], dtype=np.int64)
        values = np.array([w for _, w in items], dtype=np.float64)
        return SparseVector(indices, values)

    def nnz(self) -> int:
        return int(self.indices.size)

    def to_pairs(self) -> list[tuple[int, float]]:
        return [(int(i), float(w)) for i, w in zip(self.indices, self.values)]

    def dot(self, dense: np.ndarray) -> float:
        if self.indices.size == 0:
            return 0.0
        return float(dense[self.indices] @ self.values)

    def value_at(self, feature: int) -> float:
        pos = int(np.searchsorted(self.indices, feature))
        if pos < self.indices.size and self.indices[pos] == feature:
            return float(self.values[pos])
        return 0.0

    def l1(self) -> float:
        return float(np.abs(self.values).sum())

    def l2(self) -> float:
        return float(math.sqrt(self.values @ self.values)) if self.values.size else 0.0


def empty_vector() -> SparseVector:
    return SparseVector(np.empty(0, np.int64), np.empty(0, np.float64))


@dataclass(frozen=True, eq=False)
class Vocabulary:
    """Token -> dense feature index, with document frequencies from fit time."""

    tokens: tuple[str, ...]          # ordered by feature index
    index_of: dict[str, int]
    doc_freq: np.ndarray             # int64, aligned with tokens
    n_docs: int

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class VectorizerConfig:
    mode: str = "count"
    max_features: int | None = None

    def __post_init__(self):
        if self.mode not in VECTORIZER_MODES:
            raise FeaturizeError(f"unknown vectorizer mode {self.mode!r}")
        if self.max_features is not None and self.max_features < 1:
            raise FeaturizeError("max_features must be >= 1 when set")


def fit_vocabulary(corpus: Sequence[Sequence[str]], cfg: VectorizerConfig) -> Vocabulary:
    """Build the vocabulary over a tokenized corpus.

    With max_features set, the tokens with the highest total term count are
    kept (ties to the lexicographically smaller token). Feature indices follow
    ascending lexicographic order of the kept tokens.
    """
    if not corpus:
        raise FeaturizeError("cannot fit a vocabulary on an empty corpus")
    totals: Counter = Counter()
    df: Counter = Counter()
    for doc in corpus:
        if doc:
            totals.update(doc)
            df.update(set(doc))
    if not totals:
        raise FeaturizeError("all documents are empty")

    if cfg.max_features is not None and len(totals) > cfg.max_features:
        kept = sorted(totals, key=lambda t: (-totals[t], t))[: cfg.max_features]
    else:
        kept = list(totals)
    tokens = tuple(sorted(kept))
    index_of = {tok: i for i, tok in enumerate(tokens)}
    doc_freq = np.array([df[tok] for tok in tokens], dtype=np.int64)
    return Vocabulary(tokens, index_of, doc_freq, len(corpus))


def transform_count(doc: Sequence[str], vocab: Vocabulary) -> SparseVector:
    """Raw term counts of in-vocabulary tokens; OOV tokens are dropped."""
    counts = Counter(doc)
    pairs = [
        (vocab.index_of[tok], float(c))
        for tok, c in counts.items()
        if tok in vocab.index_of
    ]
    return SparseVector.from_pairs(pairs)


def transform_tfidf(doc: Sequence[str], vocab: Vocabulary) -> SparseVector:
    """Smoothed TF-IDF, L2-normalized: tf * (ln((1+N)/(1+df)) + 1)."""
    counts = Counter(doc)
    n = vocab.n_docs
    pairs = []
    for tok, c in counts.items():
        idx = vocab.index_of.get(tok)
        if idx is None:
            continue
        idf = math.log((1.0 + n) / (1.0 + float(vocab.doc_freq[idx]))) + 1.0
        pairs.append((idx, c * idf))
    if not pairs:
        return empty_vector()
    norm = math.sqrt(sum(w * w for _, w in pairs))
    return SparseVector.from_pairs((i, w / norm) for i, w in pairs)


def transform(doc: Sequence[str], vocab: Vocabulary, cfg: VectorizerConfig) -> SparseVector:
    if cfg.mode == "count":
        return transform_count(doc, vocab)
    return transform_tfidf(doc, vocab)
