"""Monolingual static word embeddings: skip-gram with negative sampling.

Training is implemented from scratch on numpy. The single-threaded path is
deterministic given the seed: same corpus + same config reproduces bitwise
identical vectors. A frozen :class:`EmbeddingSpace` is safe for concurrent
readers.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from .errors import RecipeAdaptError
from .corpus import EmptyCorpus


class EmptyVocabulary(RecipeAdaptError):
    pass


class DimensionMismatch(RecipeAdaptError):
    pass


@dataclass(frozen=True)
class SgnsConfig:
    """Skip-gram hyperparameters. Defaults follow the reference setup:
    300-dim vectors, 5 epochs, window 5, 10 negatives, min count 10."""

    dim: int = 300
    epochs: int = 5
    window: int = 5
    negatives: int = 10
    min_count: int = 10
    learning_rate: float = 0.025
    min_learning_rate: float = 1e-4
    subsample: float = 0.0
    seed: int = 1

    def __post_init__(self) -> None:
        for name in ("dim", "epochs", "window", "negatives", "min_count", "learning_rate"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


class Vocabulary:
    """Bijective word/index map ordered by frequency desc, then lexicographic."""

    def __init__(self, words: Sequence[str], frequencies: Sequence[int]):
        self.words = list(words)
        self.frequencies = np.asarray(frequencies, dtype=np.int64)
        self.index = {word: i for i, word in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ValueError("duplicate words in vocabulary")

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    @classmethod
    def build(cls, sentences: Iterable[Sequence[str]], min_count: int) -> "Vocabulary":
        counts = Counter()
        for sentence in sentences:
            counts.update(sentence)
        kept = [(word, freq) for word, freq in counts.items() if freq >= min_count]
        if not kept:
            raise EmptyVocabulary(f"no word reaches min_count={min_count}")
        kept.sort(key=lambda item: (-item[1], item[0]))
        return cls([w for w, _ in kept], [f for _, f in kept])


class EmbeddingSpace:
    """A vocabulary plus one dense vector per word."""

    def __init__(self, vocab: Vocabulary, vectors: np.ndarray):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(vocab):
            raise ValueError("vectors must be |V| x d")
        if not np.all(np.isfinite(vectors)):
            raise ValueError("vectors contain non-finite values")
        self.vocab = vocab
        self.vectors = vectors
        self.dim = vectors.shape[1]

    def __contains__(self, word: str) -> bool:
        return word in self.vocab

    def vector(self, word: str) -> np.ndarray:
        return self.vectors[self.vocab.index[word]]

    def save(self, path: str | Path) -> None:
        """Write the conventional text format: header `|V| d`, then word + reals."""
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(f"{len(self.vocab)} {self.dim}\n")
            for i, word in enumerate(self.vocab.words):
                values = " ".join(f"{x:.6f}" for x in self.vectors[i])
                handle.write(f"{word} {values}\n")

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingSpace":
        with open(path, encoding="utf-8") as handle:
            header = handle.readline().split()
            count, dim = int(header[0]), int(header[1])
            words: list[str] = []
            vectors = np.empty((count, dim), dtype=np.float64)
            for i in range(count):
                parts = handle.readline().rstrip("\n").split(" ")
                words.append(parts[0])
                vectors[i] = [float(x) for x in parts[1:dim + 1]]
        # frequencies are not stored in the text format
        return cls(Vocabulary(words, [1] * count), vectors)


def _negative_sampling_table(frequencies: np.ndarray, power: float = 0.75) -> np.ndarray:
    """Cumulative distribution over unigram^power, for searchsorted draws."""
    weights = frequencies.astype(np.float64) ** power
    return np.cumsum(weights / weights.sum())


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


class SkipGramEmbedder(BaseEstimator):
    """Sklearn-style estimator wrapping skip-gram negative-sampling training.

    `fit` consumes pre-tokenized sentences (lists of tokens) and exposes the
    trained space as ``space_``, with per-epoch average losses in
    ``epoch_losses_``.
    """

    def __init__(
        self,
        dim: int = 300,
        epochs: int = 5,
        window: int = 5,
        negatives: int = 10,
        min_count: int = 10,
        learning_rate: float = 0.025,
        min_learning_rate: float = 1e-4,
        subsample: float = 0.0,
        seed: int = 1,
    ):
        self.dim = dim
        self.epochs = epochs
        self.window = window
        self.negatives = negatives
        self.min_count = min_count
        self.learning_rate = learning_rate
        self.min_learning_rate = min_learning_rate
        self.subsample = subsample
        self.seed = seed

    def _config(self) -> SgnsConfig:
        return SgnsConfig(
            dim=self.dim,
            epochs=self.epochs,
            window=self.window,
            negatives=self.negatives,
            min_count=self.min_count,
            learning_rate=self.learning_rate,
            min_learning_rate=self.min_learning_rate,
            subsample=self.subsample,
            seed=self.seed,
        )

    def fit(self, X: Sequence[Sequence[str]], y=None) -> "SkipGramEmbedder":
        self.space_, self.epoch_losses_ = _train(list(X), self._config())
        return self

    def transform(self, X: Iterable[str]) -> np.ndarray:
        """Vectors for a sequence of in-vocabulary words."""
        space = self.space_
        return np.stack([space.vector(word) for word in X])


def train_sgns(sentences: Sequence[Sequence[str]], config: SgnsConfig | None = None) -> EmbeddingSpace:
    """Functional entry point; see :class:`SkipGramEmbedder` for the estimator API."""
    space, _ = _train(list(sentences), config or SgnsConfig())
    return space


def _train(
    sentences: list[Sequence[str]],
    config: SgnsConfig,
) -> tuple[EmbeddingSpace, list[float]]:
    if not sentences:
        raise EmptyCorpus("cannot train embeddings on an empty corpus")
    vocab = Vocabulary.build(sentences, config.min_count)
    rng = np.random.default_rng(config.seed)
    size, dim = len(vocab), config.dim

    vectors_in = (rng.random((size, dim)) - 0.5) / dim
    vectors_out = np.zeros((size, dim))
    cumulative = _negative_sampling_table(vocab.frequencies)

    # keep-probabilities for optional frequent-word subsampling (off by default)
    keep_prob = None
    if config.subsample > 0:
        total = float(vocab.frequencies.sum())
        ratio = config.subsample * total / vocab.frequencies
        keep_prob = np.minimum(1.0, np.sqrt(ratio) + ratio)

    indexed = [
        np.asarray([vocab.index[t] for t in sentence if t in vocab.index], dtype=np.int64)
        for sentence in sentences
    ]
    indexed = [s for s in indexed if len(s) > 0]
    if not indexed:
        raise EmptyCorpus("no sentence contains an in-vocabulary token")

    total_sentences = config.epochs * len(indexed)
    lr_start, lr_floor = config.learning_rate, config.min_learning_rate
    negatives = config.negatives
    epoch_losses: list[float] = []
    processed = 0

    for _ in range(config.epochs):
        loss_sum = 0.0
        pair_count = 0
        for sentence in indexed:
            lr = max(lr_floor, lr_start * (1.0 - processed / total_sentences))
            processed += 1
            tokens = sentence
            if keep_prob is not None:
                mask = rng.random(len(tokens)) < keep_prob[tokens]
                tokens = tokens[mask]
            n = len(tokens)
            for center_pos in range(n):
                center = tokens[center_pos]
                # word2vec-style shrunk window: uniform in [1, window]
                span = int(rng.integers(1, config.window + 1))
                lo = max(0, center_pos - span)
                hi = min(n, center_pos + span + 1)
                for context_pos in range(lo, hi):
                    if context_pos == center_pos:
                        continue
                    out_word = tokens[context_pos]
                    draws = np.searchsorted(cumulative, rng.random(negatives))
                    draws = draws[draws != out_word]
                    rows = np.concatenate(([out_word], draws))
                    outputs = vectors_out[rows]
                    center_vec = vectors_in[center]
                    scores = _sigmoid(outputs @ center_vec)
                    # labels: 1 for the true context, 0 for negatives
                    err = scores.copy()
                    err[0] -= 1.0
                    loss_sum += -math.log(max(scores[0], 1e-12)) - float(
                        np.log(np.maximum(1.0 - scores[1:], 1e-12)).sum()
                    )
                    pair_count += 1
                    grad_center = err @ outputs
                    np.subtract.at(vectors_out, rows, (lr * err)[:, None] * center_vec)
                    vectors_in[center] -= lr * grad_center
        epoch_losses.append(loss_sum / max(pair_count, 1))

    return EmbeddingSpace(vocab, vectors_in), epoch_losses


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    norm = float(np.linalg.norm(u) * np.linalg.norm(v))
    if norm == 0.0:
        return 0.0
    return float(np.dot(u, v) / norm)


def nearest_neighbors(
    space: EmbeddingSpace,
    query_vector: np.ndarray,
    k: int,
) -> list[tuple[str, float]]:
    """Top-k words by cosine similarity, ties broken by vocabulary index."""
    query_vector = np.asarray(query_vector, dtype=np.float64)
    if query_vector.shape != (space.dim,):
        raise DimensionMismatch(f"query has shape {query_vector.shape}, space dim is {space.dim}")
    if k < 1:
        raise ValueError("k must be >= 1")
    row_norms = np.linalg.norm(space.vectors, axis=1)
    query_norm = np.linalg.norm(query_vector)
    denom = row_norms * query_norm
    scores = np.where(denom > 0, (space.vectors @ query_vector) / np.where(denom == 0, 1, denom), 0.0)
    order = np.argsort(-scores, kind="stable")[: min(k, len(space.vocab))]
    return [(space.vocab.words[i], float(scores[i])) for i in order]
