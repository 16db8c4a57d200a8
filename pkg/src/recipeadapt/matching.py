"""Cross-lingual recipe pairing via translated-title similarity.

Chinese titles are translated into English by a pluggable provider, both
sides are embedded by a pluggable sentence encoder, and each source title
retrieves its top-k target titles by cosine, keeping those at or above the
similarity threshold. Provider responses can be cached on disk so re-runs
are offline-reproducible.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
import time
import unicodedata
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import httpx
import numpy as np
from sklearn.base import BaseEstimator

from .corpus import Recipe, SegmenterDictionary
from .embeddings import DimensionMismatch, EmbeddingSpace
from .errors import RecipeAdaptError

DEFAULT_K = 10
DEFAULT_THRESHOLD = 0.85


class ProviderFailure(RecipeAdaptError):
    pass


class NoCandidateAboveFloor(RecipeAdaptError):
    pass


class EmptyTargetCorpus(RecipeAdaptError):
    pass


# --------------------------------------------------------------------------
# providers

class StaticFileTranslator:
    """Title translations from a two-column TSV file; total over its titles."""

    def __init__(self, path: str | Path):
        self.table: dict[str, str] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            src, _, tgt = line.partition("\t")
            self.table[src] = tgt

    def translate(self, title: str, direction: str) -> str:
        try:
            return self.table[title]
        except KeyError:
            raise ProviderFailure(f"no translation for title {title!r}") from None


class HttpTranslator:
    """POSTs the title as a text body to `url?direction=...`, expects text back."""

    def __init__(self, url: str, timeout: float = 30.0, retries: int = 3):
        self.url = url
        self.timeout = timeout
        self.retries = retries

    def translate(self, title: str, direction: str) -> str:
        return _post_with_retries(
            self.url, title, {"direction": direction}, self.timeout, self.retries
        ).text


class StaticFileEmbedder:
    """Sentence vectors from a JSONL file of {"text": ..., "vector": [...]} records."""

    def __init__(self, path: str | Path):
        self.table: dict[str, np.ndarray] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            self.table[record["text"]] = np.asarray(record["vector"], dtype=np.float64)

    def embed(self, text: str) -> np.ndarray:
        try:
            return self.table[text]
        except KeyError:
            raise ProviderFailure(f"no vector for text {text!r}") from None


class HttpEmbedder:
    """POSTs text, expects a JSON array of floats back."""

    def __init__(self, url: str, timeout: float = 30.0, retries: int = 3):
        self.url = url
        self.timeout = timeout
        self.retries = retries

    def embed(self, text: str) -> np.ndarray:
        response = _post_with_retries(self.url, text, {}, self.timeout, self.retries)
        return np.asarray(response.json(), dtype=np.float64)


class AveragedWordVectorEmbedder:
    """Fallback sentence encoder: mean of in-vocabulary word vectors.

    English text is lowercased and whitespace-split; Chinese text is
    segmented with the supplied dictionary. Fully out-of-vocabulary text
    maps to the zero vector.
    """

    def __init__(self, space: EmbeddingSpace, lang: str = "en",
                 dictionary: SegmenterDictionary | None = None):
        self.space = space
        self.lang = lang
        self.dictionary = dictionary

    def embed(self, text: str) -> np.ndarray:
        if self.lang == "zh":
            if self.dictionary is None:
                raise ProviderFailure("zh averaging embedder needs a segmenter dictionary")
            tokens = self.dictionary.segment(text)
        else:
            tokens = text.lower().split()
        vectors = [self.space.vector(t) for t in tokens if t in self.space]
        if not vectors:
            return np.zeros(self.space.dim)
        return np.mean(vectors, axis=0)


def _post_with_retries(url, body: str, params: dict, timeout: float, retries: int) -> httpx.Response:
    delay = 0.5
    last: Exception | None = None
    for _ in range(max(retries, 1)):
        try:
            response = httpx.post(url, params=params, content=body.encode("utf-8"), timeout=timeout)
            response.raise_for_status()
            return response
        except (httpx.HTTPError, OSError) as exc:
            last = exc
            time.sleep(delay)
            delay *= 2
    raise ProviderFailure(f"provider at {url} failed after {retries} attempts: {last}")


class ProviderCache:
    """Disk cache keyed by input hash, so provider-backed runs replay offline."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, kind: str, key: str) -> Path:
        digest = hashlib.sha256(key.encode("utf-8")).hexdigest()
        return self.directory / f"{kind}-{digest}.json"

    def get(self, kind: str, key: str):
        path = self._path(kind, key)
        if path.exists():
            return json.loads(path.read_text(encoding="utf-8"))
        return None

    def put(self, kind: str, key: str, value) -> None:
        self._path(kind, key).write_text(json.dumps(value, ensure_ascii=False), encoding="utf-8")


class CachedTranslator:
    def __init__(self, inner, cache: ProviderCache):
        self.inner = inner
        self.cache = cache

    def translate(self, title: str, direction: str) -> str:
        key = f"{direction}\x00{title}"
        hit = self.cache.get("translate", key)
        if hit is not None:
            return hit
        value = self.inner.translate(title, direction)
        self.cache.put("translate", key, value)
        return value


class CachedEmbedder:
    def __init__(self, inner, cache: ProviderCache):
        self.inner = inner
        self.cache = cache

    def embed(self, text: str) -> np.ndarray:
        hit = self.cache.get("embed", text)
        if hit is not None:
            return np.asarray(hit, dtype=np.float64)
        value = self.inner.embed(text)
        self.cache.put("embed", text, [float(x) for x in value])
        return value


# --------------------------------------------------------------------------
# pair dataset

@dataclass
class PairDataset:
    """Many-to-many matches: per source id, targets with cosines, plus split labels."""

    direction: str
    k: int
    threshold: float
    entries: dict[str, list[tuple[str, float]]] = field(default_factory=dict)
    split: dict[str, str] = field(default_factory=dict)

    def validate(self) -> None:
        for source_id, candidates in self.entries.items():
            if len(candidates) > self.k:
                raise ValueError(f"source {source_id} has more than k={self.k} targets")
            cosines = [c for _, c in candidates]
            if any(c < self.threshold for c in cosines):
                raise ValueError(f"source {source_id} has a candidate below threshold")
            if cosines != sorted(cosines, reverse=True):
                raise ValueError(f"source {source_id} candidates not sorted by cosine desc")
        if self.split and set(self.split) != set(self.entries):
            raise ValueError("split labels do not partition the entries")

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(json.dumps({
                "direction": self.direction, "k": self.k, "threshold": self.threshold,
            }) + "\n")
            for source_id in sorted(self.entries):
                for target_id, cos in self.entries[source_id]:
                    record = {
                        "source_id": source_id,
                        "target_id": target_id,
                        "cosine": round(cos, 6),
                        "split": self.split.get(source_id),
                    }
                    handle.write(json.dumps(record, ensure_ascii=False) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "PairDataset":
        with open(path, encoding="utf-8") as handle:
            header = json.loads(handle.readline())
            dataset = cls(header["direction"], header["k"], header["threshold"])
            for line in handle:
                if not line.strip():
                    continue
                record = json.loads(line)
                dataset.entries.setdefault(record["source_id"], []).append(
                    (record["target_id"], record["cosine"])
                )
                if record.get("split"):
                    dataset.split[record["source_id"]] = record["split"]
        return dataset


def _prepared_titles(recipes: Sequence[Recipe], direction_to_en: bool, translator,
                     max_workers: int) -> list[str]:
    if not direction_to_en:
        return [r.title for r in recipes]
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(lambda r: translator.translate(r.title, "zh-en"), recipes))
    return [translator.translate(r.title, "zh-en") for r in recipes]


def _embed_all(texts: Sequence[str], embedder, max_workers: int) -> np.ndarray:
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            vectors = list(pool.map(embedder.embed, texts))
    else:
        vectors = [embedder.embed(text) for text in texts]
    dims = {len(v) for v in vectors}
    if len(dims) > 1:
        raise DimensionMismatch(f"embedder returned mixed dimensions: {sorted(dims)}")
    return np.asarray(vectors, dtype=np.float64)


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1)
    safe = np.where(norms == 0, 1.0, norms)
    return matrix / safe[:, None]


def match_recipes(
    src_corpus: Sequence[Recipe],
    tgt_corpus: Sequence[Recipe],
    translator,
    embedder,
    k: int = DEFAULT_K,
    threshold: float = DEFAULT_THRESHOLD,
    max_workers: int = 1,
    block_size: int = 256,
) -> PairDataset:
    """Match every source recipe to its top-k target recipes by title cosine.

    Whichever side is Chinese has its titles translated into English first;
    candidates under `threshold` are dropped. Exact search over blocked
    matrix products; candidate lists are sorted by cosine descending with
    ties broken by target id.
    """
    if not tgt_corpus:
        raise EmptyTargetCorpus("cannot match against an empty target corpus")
    src_lang = src_corpus[0].lang if src_corpus else "zh"
    tgt_lang = tgt_corpus[0].lang
    direction = f"{src_lang}-{tgt_lang}"

    src_titles = _prepared_titles(src_corpus, src_lang == "zh", translator, max_workers)
    tgt_titles = _prepared_titles(tgt_corpus, tgt_lang == "zh", translator, max_workers)
    src_matrix = _unit_rows(_embed_all(src_titles, embedder, max_workers))
    tgt_matrix = _unit_rows(_embed_all(tgt_titles, embedder, max_workers))
    if src_matrix.shape[1] != tgt_matrix.shape[1]:
        raise DimensionMismatch("source and target title embeddings differ in dimension")

    tgt_ids = [r.id for r in tgt_corpus]
    dataset = PairDataset(direction, k, threshold)
    for start in range(0, len(src_corpus), block_size):
        block = src_matrix[start:start + block_size]
        sims = block @ tgt_matrix.T
        for offset, row in enumerate(sims):
            keep = np.flatnonzero(row >= threshold)
            if keep.size == 0:
                continue
            ranked = sorted(keep, key=lambda j: (-row[j], tgt_ids[j]))[:k]
            source = src_corpus[start + offset]
            dataset.entries[source.id] = [(tgt_ids[j], float(row[j])) for j in ranked]
    dataset.validate()
    return dataset


class TitleMatcher(BaseEstimator):
    """Sklearn-style wrapper: fit stores the target corpus, predict matches sources."""

    def __init__(self, translator=None, embedder=None, k: int = DEFAULT_K,
                 threshold: float = DEFAULT_THRESHOLD, max_workers: int = 1):
        self.translator = translator
        self.embedder = embedder
        self.k = k
        self.threshold = threshold
        self.max_workers = max_workers

    def fit(self, X: Sequence[Recipe], y=None) -> "TitleMatcher":
        self.target_corpus_ = list(X)
        return self

    def predict(self, X: Sequence[Recipe]) -> PairDataset:
        return match_recipes(
            list(X), self.target_corpus_, self.translator, self.embedder,
            k=self.k, threshold=self.threshold, max_workers=self.max_workers,
        )


def split_train_val(dataset: PairDataset, val_fraction: float, seed: int) -> PairDataset:
    """Assign train/val labels by source recipe, deterministically per seed.

    All targets of one source land in the same split.
    """
    if not 0 < val_fraction < 1:
        raise ValueError("val_fraction must be in (0, 1)")
    source_ids = sorted(dataset.entries)
    rng = random.Random(seed)
    rng.shuffle(source_ids)
    val_count = int(round(val_fraction * len(source_ids)))
    val_ids = set(source_ids[:val_count])
    split = {sid: ("val" if sid in val_ids else "train") for sid in dataset.entries}
    return PairDataset(dataset.direction, dataset.k, dataset.threshold,
                       entries=dict(dataset.entries), split=split)


# --------------------------------------------------------------------------
# gold-title lookup

_PUNCT_RE = re.compile(r"[^\w\s]|_", re.UNICODE)


def normalize_title(title: str) -> str:
    title = unicodedata.normalize("NFKC", title).lower()
    title = _PUNCT_RE.sub(" ", title)
    return " ".join(title.split())


def _jaccard(a: set, b: set) -> float:
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)


def _trigrams(text: str) -> set[str]:
    padded = f"  {text} "
    return {padded[i:i + 3] for i in range(len(padded) - 2)}


def title_similarity(a: str, b: str) -> float:
    """Max of token-set Jaccard and character-trigram Jaccard on normalized titles."""
    na, nb = normalize_title(a), normalize_title(b)
    if na == nb:
        return 1.0
    token_sim = _jaccard(set(na.split()), set(nb.split()))
    trigram_sim = _jaccard(_trigrams(na), _trigrams(nb))
    return max(token_sim, trigram_sim)


def lookup_gold_title(
    query_title: str,
    corpus: Sequence[Recipe],
    floor: float = 0.3,
) -> tuple[Recipe, float]:
    """Best fuzzy title match in the corpus, for manual confirmation.

    Tolerates capitalization, punctuation, and slight word-choice/order
    differences. Raises NoCandidateAboveFloor when nothing scores >= floor.
    """
    if not corpus:
        raise EmptyTargetCorpus("cannot look up a title in an empty corpus")
    best: Recipe | None = None
    best_score = -1.0
    for recipe in corpus:
        score = title_similarity(query_title, recipe.title)
        if score > best_score or (score == best_score and best is not None and recipe.id < best.id):
            best, best_score = recipe, score
    if best is None or best_score < floor:
        raise NoCandidateAboveFloor(f"best candidate scored {best_score:.3f} < floor {floor}")
    return best, best_score
