"""Recipe records: cleaning, serialization, token counting, corpus statistics.

A recipe is a title, an ingredient list, and a step list, tagged with a
language (``en`` or ``zh``). Collections are stored as UTF-8 line-delimited
JSON records with fields ``id``, ``lang``, ``title``, ``ingredients``,
``steps``.
"""

from __future__ import annotations

import json
import re
from collections.abc import Callable, Iterable, Iterator
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import RecipeAdaptError

LANGS = ("en", "zh")

TITLE_HEADING = "Title:"
INGREDIENTS_HEADING = "Ingredients:"
STEPS_HEADING = "Steps:"

# Code-point ranges stripped as emoji/pictographs, plus the joiner and
# variation-selector characters that only occur attached to them.
EMOJI_RANGES: tuple[tuple[int, int], ...] = (
    (0x1F000, 0x1F02F),  # mahjong tiles
    (0x1F0A0, 0x1F0FF),  # playing cards
    (0x1F1E6, 0x1F1FF),  # regional indicator symbols
    (0x1F300, 0x1F5FF),  # miscellaneous symbols and pictographs
    (0x1F600, 0x1F64F),  # emoticons
    (0x1F680, 0x1F6FF),  # transport and map symbols
    (0x1F700, 0x1F77F),  # alchemical symbols
    (0x1F780, 0x1F7FF),  # geometric shapes extended
    (0x1F800, 0x1F8FF),  # supplemental arrows-C
    (0x1F900, 0x1F9FF),  # supplemental symbols and pictographs
    (0x1FA00, 0x1FA6F),  # chess symbols
    (0x1FA70, 0x1FAFF),  # symbols and pictographs extended-A
    (0x2600, 0x26FF),    # miscellaneous symbols
    (0x2700, 0x27BF),    # dingbats
    (0x2B00, 0x2B5F),    # miscellaneous symbols and arrows
    (0xFE00, 0xFE0F),    # variation selectors
    (0x200D, 0x200D),    # zero-width joiner
    (0x20E3, 0x20E3),    # combining enclosing keycap
)

# Default decorative symbols stripped in addition to the emoji blocks. The
# exact set is a configurable choice, not a fixed contract; pass your own
# `symbols` to clean_recipe to override.
DEFAULT_SPECIAL_SYMBOLS = "★☆♥♡❤●◆◇■□▲△▶▷◀◁▼▽※❀✿"

REJECT_EMPTY_FIELD = "EmptyField"
REJECT_UNPARSEABLE = "Unparseable"


class EmptyCorpus(RecipeAdaptError):
    pass


class MissingDictionary(RecipeAdaptError):
    pass


@dataclass(frozen=True)
class Recipe:
    """One recipe; the unit everything else operates on."""

    id: str
    lang: str
    title: str
    ingredients: tuple[str, ...]
    steps: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.lang not in LANGS:
            raise ValueError(f"lang must be one of {LANGS}, got {self.lang!r}")
        if not self.title:
            raise ValueError("title must be nonempty")
        if not self.ingredients:
            raise ValueError("ingredients must be nonempty")
        if not self.steps:
            raise ValueError("steps must be nonempty")

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "lang": self.lang,
            "title": self.title,
            "ingredients": list(self.ingredients),
            "steps": list(self.steps),
        }

    @classmethod
    def from_record(cls, record: dict) -> "Recipe":
        return cls(
            id=str(record["id"]),
            lang=record["lang"],
            title=record["title"],
            ingredients=tuple(record["ingredients"]),
            steps=tuple(record["steps"]),
        )


@dataclass(frozen=True)
class Rejection:
    """A record dropped during cleaning, with the reason why."""

    id: str
    reason: str
    detail: str = ""


@dataclass(frozen=True)
class CorpusStats:
    recipe_count: int
    mean_tokens: float
    mean_ingredients: float
    mean_steps: float

    def to_record(self) -> dict:
        return {
            "recipe_count": self.recipe_count,
            "mean_tokens": round(self.mean_tokens, 4),
            "mean_ingredients": round(self.mean_ingredients, 4),
            "mean_steps": round(self.mean_steps, 4),
        }

    def render(self) -> str:
        rec = self.to_record()
        return "\n".join(f"{key}\t{rec[key]}" for key in rec)


def _build_strip_regex(symbols: str) -> re.Pattern[str]:
    parts = [f"{chr(lo)}-{chr(hi)}" if lo != hi else chr(lo) for lo, hi in EMOJI_RANGES]
    cls = "".join(parts) + re.escape(symbols)
    return re.compile(f"[{cls}]+")


_DEFAULT_STRIP_RE = _build_strip_regex(DEFAULT_SPECIAL_SYMBOLS)


def strip_symbols(text: str, symbols: str = DEFAULT_SPECIAL_SYMBOLS) -> str:
    """Remove emoji and the configured special symbols from `text`."""
    if symbols == DEFAULT_SPECIAL_SYMBOLS:
        pattern = _DEFAULT_STRIP_RE
    else:
        pattern = _build_strip_regex(symbols)
    return pattern.sub("", text)


def _clean_line(text: str, symbols: str) -> str:
    # Collapsing whitespace also removes internal newlines, which keeps
    # serialized recipes parseable line by line.
    return " ".join(strip_symbols(text, symbols).split())


def clean_recipe(raw: dict, symbols: str = DEFAULT_SPECIAL_SYMBOLS) -> Recipe | Rejection:
    """Clean one raw record into a Recipe, or reject it with a reason code.

    Emoji and `symbols` are stripped from every text field and whitespace is
    normalized; lines that end up empty are dropped. A record missing any of
    the three content fields after cleaning is rejected with ``EmptyField``;
    a structurally malformed record is rejected with ``Unparseable``.
    Idempotent: cleaning a cleaned record changes nothing.
    """
    rid = str(raw.get("id", ""))
    lang = raw.get("lang")
    if lang not in LANGS:
        return Rejection(rid, REJECT_UNPARSEABLE, f"bad lang {lang!r}")
    title = raw.get("title")
    ingredients = raw.get("ingredients")
    steps = raw.get("steps")
    if not isinstance(title, str) or isinstance(ingredients, str) or isinstance(steps, str):
        return Rejection(rid, REJECT_UNPARSEABLE, "title must be text; ingredients/steps must be lists")
    try:
        ingredient_lines = [str(line) for line in ingredients]
        step_lines = [str(line) for line in steps]
    except TypeError:
        return Rejection(rid, REJECT_UNPARSEABLE, "ingredients/steps not iterable")

    title = _clean_line(title, symbols)
    ingredient_lines = [cleaned for line in ingredient_lines if (cleaned := _clean_line(line, symbols))]
    step_lines = [cleaned for line in step_lines if (cleaned := _clean_line(line, symbols))]

    for name, value in (("title", title), ("ingredients", ingredient_lines), ("steps", step_lines)):
        if not value:
            return Rejection(rid, REJECT_EMPTY_FIELD, name)
    return Recipe(rid, lang, title, tuple(ingredient_lines), tuple(step_lines))


def serialize_recipe(recipe: Recipe) -> str:
    """Render a recipe as one text with `Title:` / `Ingredients:` / `Steps:` headings.

    The headings are the same for both languages and are treated as meta-text:
    :func:`strip_meta` removes them again before evaluation.
    """
    lines = [f"{TITLE_HEADING} {recipe.title}", INGREDIENTS_HEADING]
    lines.extend(recipe.ingredients)
    lines.append(STEPS_HEADING)
    lines.extend(recipe.steps)
    return "\n".join(lines)


def parse_serialized(text: str, *, id: str = "", lang: str = "en") -> Recipe:
    """Inverse of :func:`serialize_recipe`; raises ValueError on malformed text."""
    lines = text.split("\n")
    if not lines or not lines[0].startswith(TITLE_HEADING):
        raise ValueError(f"expected text to start with {TITLE_HEADING!r}")
    title = lines[0][len(TITLE_HEADING):].strip()
    try:
        ing_at = lines.index(INGREDIENTS_HEADING)
        steps_at = lines.index(STEPS_HEADING, ing_at + 1)
    except ValueError:
        raise ValueError("missing Ingredients:/Steps: headings") from None
    ingredients = tuple(lines[ing_at + 1:steps_at])
    steps = tuple(lines[steps_at + 1:])
    return Recipe(id, lang, title, ingredients, steps)


def strip_meta(text: str) -> str:
    """Remove the serialization headings, leaving recipe content only."""
    out = []
    for line in text.split("\n"):
        if line.startswith(TITLE_HEADING):
            rest = line[len(TITLE_HEADING):].strip()
            if rest:
                out.append(rest)
        elif line not in (INGREDIENTS_HEADING, STEPS_HEADING):
            out.append(line)
    return "\n".join(out)


class SegmenterDictionary:
    """Word list with frequencies for greedy longest-match Chinese segmentation."""

    def __init__(self, frequencies: dict[str, int]):
        if not frequencies:
            raise ValueError("segmenter dictionary must be nonempty")
        if any(not word for word in frequencies):
            raise ValueError("segmenter dictionary entries must be nonempty")
        self.frequencies = dict(frequencies)
        self._max_len = max(len(word) for word in frequencies)

    def __contains__(self, word: str) -> bool:
        return word in self.frequencies

    def __len__(self) -> int:
        return len(self.frequencies)

    def segment(self, text: str) -> list[str]:
        """Greedy longest-match segmentation; unmatched characters become single tokens."""
        tokens: list[str] = []
        for chunk in text.split():
            i = 0
            n = len(chunk)
            while i < n:
                for width in range(min(self._max_len, n - i), 1, -1):
                    if chunk[i:i + width] in self.frequencies:
                        tokens.append(chunk[i:i + width])
                        i += width
                        break
                else:
                    tokens.append(chunk[i])
                    i += 1
        return tokens

    @classmethod
    def load(cls, path: str | Path) -> "SegmenterDictionary":
        """Load `word<TAB>frequency` lines (frequency optional, default 1)."""
        frequencies: dict[str, int] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            word, _, freq = line.partition("\t")
            frequencies[word] = int(freq) if freq else 1
        return cls(frequencies)

    @classmethod
    def bundled(cls) -> "SegmenterDictionary":
        text = resources.files("recipeadapt.data").joinpath("zh_words.txt").read_text("utf-8")
        frequencies: dict[str, int] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            word, _, freq = line.partition("\t")
            frequencies[word] = int(freq) if freq else 1
        return cls(frequencies)


def token_count(text: str, lang: str, dictionary: SegmenterDictionary | None = None) -> int:
    """Count tokens: whitespace split for en, greedy dictionary segmentation for zh."""
    if lang == "en":
        return len(text.split())
    if lang == "zh":
        if dictionary is None:
            raise MissingDictionary("zh token counting requires a SegmenterDictionary")
        return len(dictionary.segment(text))
    raise ValueError(f"lang must be one of {LANGS}, got {lang!r}")


def recipe_text(recipe: Recipe) -> str:
    """The recipe as one text block, without serialization headings."""
    return strip_meta(serialize_recipe(recipe))


def default_counter(lang: str, dictionary: SegmenterDictionary | None = None) -> Callable[[Recipe], int]:
    """Per-recipe token counter over the heading-free serialized text."""
    return lambda recipe: token_count(recipe_text(recipe), lang, dictionary)


def load_precomputed_counter(path: str | Path) -> Callable[[Recipe], int]:
    """Counter backed by an external `id<TAB>count` file (e.g. subword counts)."""
    counts: dict[str, int] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        rid, _, count = line.partition("\t")
        counts[rid] = int(count)

    def counter(recipe: Recipe) -> int:
        return counts[recipe.id]

    return counter


def filter_by_length(
    corpus: Iterable[Recipe],
    counter: Callable[[Recipe], int],
    max_tokens: int,
) -> list[Recipe]:
    """Keep recipes whose token count is <= max_tokens, preserving order."""
    return [recipe for recipe in corpus if counter(recipe) <= max_tokens]


def corpus_stats(
    corpus: Iterable[Recipe],
    dictionary: SegmenterDictionary | None = None,
) -> CorpusStats:
    """Means over the corpus; token counts use each recipe's own language counter."""
    total_tokens = 0
    total_ingredients = 0
    total_steps = 0
    count = 0
    for recipe in corpus:
        total_tokens += token_count(recipe_text(recipe), recipe.lang, dictionary)
        total_ingredients += len(recipe.ingredients)
        total_steps += len(recipe.steps)
        count += 1
    if count == 0:
        raise EmptyCorpus("corpus_stats requires a nonempty corpus")
    return CorpusStats(
        recipe_count=count,
        mean_tokens=total_tokens / count,
        mean_ingredients=total_ingredients / count,
        mean_steps=total_steps / count,
    )


def read_records(path: str | Path) -> Iterator[dict]:
    """Yield raw line-delimited JSON records."""
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                yield json.loads(line)


def read_recipes(path: str | Path) -> list[Recipe]:
    return [Recipe.from_record(record) for record in read_records(path)]


def write_recipes(recipes: Iterable[Recipe], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for recipe in recipes:
            handle.write(json.dumps(recipe.to_record(), ensure_ascii=False) + "\n")


def clean_corpus(
    raw_records: Iterable[dict],
    symbols: str = DEFAULT_SPECIAL_SYMBOLS,
) -> tuple[list[Recipe], list[Rejection]]:
    """Clean every record; per-record results are independent so order is stable."""
    kept: list[Recipe] = []
    rejected: list[Rejection] = []
    for raw in raw_records:
        result = clean_recipe(raw, symbols)
        if isinstance(result, Recipe):
            kept.append(result)
        else:
            rejected.append(result)
    return kept, rejected
