"""Cross-lingual embedding alignment and bilingual lexicon induction.

A source space is mapped into a target space by an orthogonal matrix fitted
on a small seed dictionary (solved in closed form via SVD), optionally
refined by self-learning rounds that re-induce a dictionary from mutual
nearest neighbors and refit. Induced lexicons are scored with Precision@k
against gold translation lists.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .embeddings import EmbeddingSpace, Vocabulary, nearest_neighbors
from .errors import RecipeAdaptError

logger = logging.getLogger(__name__)

ORTHOGONALITY_TOLERANCE = 1e-8


class ZeroVector(RecipeAdaptError):
    pass


class ShapeMismatch(RecipeAdaptError):
    pass


class UnknownQueryWord(RecipeAdaptError):
    pass


class EmptyQuerySet(RecipeAdaptError):
    pass


@dataclass
class CrossLingualMapping:
    """Orthogonal d x d matrix plus the normalization recipe it was fit under."""

    matrix: np.ndarray
    unit_length: bool = True
    mean_center: bool = False

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        d1, d2 = self.matrix.shape
        if d1 != d2:
            raise ShapeMismatch("mapping matrix must be square")
        if self.orthogonality_error() >= ORTHOGONALITY_TOLERANCE:
            raise ValueError("mapping matrix is not orthogonal")

    def orthogonality_error(self) -> float:
        d = self.matrix.shape[0]
        return float(np.linalg.norm(self.matrix.T @ self.matrix - np.eye(d)))

    def apply(self, vectors: np.ndarray) -> np.ndarray:
        return np.asarray(vectors, dtype=np.float64) @ self.matrix

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(f"unit_length={int(self.unit_length)} mean_center={int(self.mean_center)}\n")
            handle.write(f"{self.matrix.shape[0]}\n")
            for row in self.matrix:
                handle.write(" ".join(repr(float(x)) for x in row) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "CrossLingualMapping":
        with open(path, encoding="utf-8") as handle:
            flags = dict(part.split("=") for part in handle.readline().split())
            d = int(handle.readline())
            matrix = np.array([[float(x) for x in handle.readline().split()] for _ in range(d)])
        return cls(matrix, unit_length=bool(int(flags["unit_length"])), mean_center=bool(int(flags["mean_center"])))


def normalize_space(space: EmbeddingSpace, mean_center: bool = False) -> EmbeddingSpace:
    """Unit-normalize every vector, after optional mean-centering.

    Plain unit-length normalization (the default) is idempotent; centering
    is not, so it is off unless requested.
    """
    vectors = space.vectors
    if mean_center:
        vectors = vectors - vectors.mean(axis=0)
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(norms == 0):
        index = int(np.argmin(norms))
        raise ZeroVector(f"row {index} ({space.vocab.words[index]!r}) has zero norm")
    return EmbeddingSpace(space.vocab, vectors / norms[:, None])


def fit_orthogonal_map(
    X: np.ndarray,
    Z: np.ndarray,
    unit_length: bool = True,
    mean_center: bool = False,
) -> CrossLingualMapping:
    """Least-squares orthogonal map from paired rows: argmin_W ||XW - Z||_F.

    Solved via the SVD of X.T @ Z; with U S V^T = X.T @ Z the minimizer over
    orthogonal matrices is W = U V^T.
    """
    X = np.asarray(X, dtype=np.float64)
    Z = np.asarray(Z, dtype=np.float64)
    if X.shape != Z.shape:
        raise ShapeMismatch(f"paired matrices differ in shape: {X.shape} vs {Z.shape}")
    if X.ndim != 2 or X.shape[0] < 1:
        raise ShapeMismatch("need at least one paired row")
    u, _, vt = np.linalg.svd(X.T @ Z)
    return CrossLingualMapping(u @ vt, unit_length=unit_length, mean_center=mean_center)


class OrthogonalAligner(BaseEstimator, TransformerMixin):
    """Sklearn-style wrapper: fit on paired seed matrices, transform source vectors."""

    def __init__(self, unit_length: bool = True, mean_center: bool = False):
        self.unit_length = unit_length
        self.mean_center = mean_center

    def fit(self, X: np.ndarray, Z: np.ndarray) -> "OrthogonalAligner":
        self.mapping_ = fit_orthogonal_map(
            X, Z, unit_length=self.unit_length, mean_center=self.mean_center
        )
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        return self.mapping_.apply(X)


def seed_matrices(
    src_space: EmbeddingSpace,
    tgt_space: EmbeddingSpace,
    seed: Sequence[tuple[str, str]],
) -> tuple[np.ndarray, np.ndarray, list[tuple[str, str]]]:
    """Paired vector matrices for the seed entries present in both vocabularies.

    Missing words are dropped with a warning rather than failing the run;
    small corpora rarely cover a full seed list.
    """
    if not seed:
        raise ValueError("seed dictionary must be nonempty")
    used: list[tuple[str, str]] = []
    for src_word, tgt_word in seed:
        if src_word in src_space and tgt_word in tgt_space:
            used.append((src_word, tgt_word))
        else:
            logger.warning("seed pair (%s, %s) missing from vocabulary; dropped", src_word, tgt_word)
    if not used:
        raise ValueError("no seed pair is covered by both vocabularies")
    X = np.stack([src_space.vector(s) for s, _ in used])
    Z = np.stack([tgt_space.vector(t) for _, t in used])
    return X, Z, used


def _mutual_nearest_pairs(mapped_src: np.ndarray, tgt: np.ndarray) -> list[tuple[int, int]]:
    sims = mapped_src @ tgt.T
    forward = np.argmax(sims, axis=1)
    backward = np.argmax(sims, axis=0)
    return [(i, int(j)) for i, j in enumerate(forward) if backward[j] == i]


def align_with_self_learning(
    src_space: EmbeddingSpace,
    tgt_space: EmbeddingSpace,
    seed: Sequence[tuple[str, str]],
    iterations: int = 0,
    mean_center: bool = False,
) -> CrossLingualMapping:
    """Fit on the seed, then optionally refine by re-inducing a dictionary.

    Iteration 0 is exactly the seed fit. Each refinement round induces a
    fresh dictionary from mutual nearest neighbors (plain cosine) under the
    current mapping and refits; it stops early once the induced dictionary
    stops changing.
    """
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    src_n = normalize_space(src_space, mean_center=mean_center)
    tgt_n = normalize_space(tgt_space, mean_center=mean_center)
    X, Z, _ = seed_matrices(src_n, tgt_n, seed)
    mapping = fit_orthogonal_map(X, Z, mean_center=mean_center)

    previous: set[tuple[int, int]] | None = None
    for _ in range(iterations):
        pairs = _mutual_nearest_pairs(mapping.apply(src_n.vectors), tgt_n.vectors)
        current = set(pairs)
        if current == previous:
            break
        previous = current
        X = src_n.vectors[[i for i, _ in pairs]]
        Z = tgt_n.vectors[[j for _, j in pairs]]
        mapping = fit_orthogonal_map(X, Z, mean_center=mean_center)
    return mapping


def induce_lexicon(
    mapping: CrossLingualMapping,
    src_space: EmbeddingSpace,
    tgt_space: EmbeddingSpace,
    queries: Sequence[str],
    k: int,
) -> list[tuple[str, list[tuple[str, float]]]]:
    """Top-k target words per query under the mapping (cosine retrieval)."""
    src_n = normalize_space(src_space, mean_center=mapping.mean_center)
    tgt_n = normalize_space(tgt_space, mean_center=mapping.mean_center)
    results = []
    for query in queries:
        if query not in src_n:
            raise UnknownQueryWord(query)
        mapped = mapping.apply(src_n.vector(query))
        results.append((query, nearest_neighbors(tgt_n, mapped, k)))
    return results


@dataclass(frozen=True)
class LexiconEval:
    n: int
    n_at_k: int
    k: int

    @property
    def precision(self) -> float:
        return self.n_at_k / self.n


def precision_at_k(
    induced: Sequence[tuple[str, list[tuple[str, float]]]],
    gold: dict[str, set[str] | list[str]],
    k: int,
) -> LexiconEval:
    """Fraction of queries whose gold translation appears in the top k.

    Correctness is exact string match against the gold list for the query.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not induced:
        raise EmptyQuerySet("no queries to evaluate")
    hits = 0
    for query, candidates in induced:
        if query not in gold or not gold[query]:
            raise ValueError(f"query {query!r} has no gold translation")
        accepted = set(gold[query])
        if any(word in accepted for word, _ in candidates[:k]):
            hits += 1
    return LexiconEval(n=len(induced), n_at_k=hits, k=k)


@dataclass(frozen=True)
class LexiconBreakdown:
    """Three-way split of induced entries: literal match / cultural equivalent / miss."""

    literal: int
    cultural: int
    unmatched: int

    @property
    def total(self) -> int:
        return self.literal + self.cultural + self.unmatched


def split_by_gold(
    induced: Sequence[tuple[str, list[tuple[str, float]]]],
    literal_gold: dict[str, set[str] | list[str]],
    cultural_gold: dict[str, set[str] | list[str]],
    k: int,
) -> LexiconBreakdown:
    """Classify each query by which gold list its top-k hits first: literal wins ties."""
    literal = cultural = unmatched = 0
    for query, candidates in induced:
        top = [word for word, _ in candidates[:k]]
        if any(word in set(literal_gold.get(query, ())) for word in top):
            literal += 1
        elif any(word in set(cultural_gold.get(query, ())) for word in top):
            cultural += 1
        else:
            unmatched += 1
    return LexiconBreakdown(literal, cultural, unmatched)


def load_seed_dictionary(path: str | Path) -> list[tuple[str, str]]:
    """Two-column tab-separated UTF-8 pairs, comments with #."""
    pairs = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        src, _, tgt = line.partition("\t")
        if not tgt:
            raise ValueError(f"malformed dictionary line: {line!r}")
        pairs.append((src, tgt))
    return pairs


def load_gold_translations(path: str | Path) -> dict[str, set[str]]:
    """Gold lists: `query<TAB>translation` with repeated lines for alternatives."""
    gold: dict[str, set[str]] = {}
    for src, tgt in load_seed_dictionary(path):
        gold.setdefault(src, set()).add(tgt)
    return gold


def bundled_seed_dictionary(direction: str = "en-zh") -> list[tuple[str, str]]:
    """The bundled 15 culturally neutral seed pairs, oriented per direction."""
    text = resources.files("recipeadapt.data").joinpath("seed_dict_en_zh.tsv").read_text("utf-8")
    pairs = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        en, _, zh = line.partition("\t")
        pairs.append((en, zh))
    if direction == "en-zh":
        return pairs
    if direction == "zh-en":
        return [(zh, en) for en, zh in pairs]
    raise ValueError(f"direction must be en-zh or zh-en, got {direction!r}")
