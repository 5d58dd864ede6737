"""Load, normalize, validate, and split article collections.

The input format is a UTF-8 JSON array of objects with string fields
``id``, ``document``, and ``summary``. Extra keys are preserved on the
article and written back out, but never interpreted.
"""

from __future__ import annotations

import json
import math
import random
import re
from dataclasses import dataclass, field
from typing import Dict, IO, List, Tuple, Union

_WS_RUN = re.compile(r"\s+")

REQUIRED_FIELDS = ("id", "document", "summary")


class CorpusError(ValueError):
    """Raised for malformed or invalid corpus input."""


def normalize_text(raw: str) -> str:
    """Collapse whitespace runs (including newlines) to single spaces and trim.

    Idempotent; no characters other than whitespace are altered.
    """
    return _WS_RUN.sub(" ", raw).strip()


@dataclass(frozen=True)
class Article:
    id: str
    document: str
    summary: str
    extra: Dict[str, object] = field(default_factory=dict, compare=False)

    def to_dict(self) -> Dict[str, object]:
        out = dict(self.extra)
        out["id"] = self.id
        out["document"] = self.document
        out["summary"] = self.summary
        return out


@dataclass(frozen=True)
class Corpus:
    articles: Tuple[Article, ...]
    source_language: str = "en"
    name: str = ""

    def __len__(self) -> int:
        return len(self.articles)

    def __iter__(self):
        return iter(self.articles)

    def ids(self) -> List[str]:
        return [a.id for a in self.articles]

    def to_json(self) -> str:
        rows = [a.to_dict() for a in self.articles]
        return json.dumps(rows, ensure_ascii=False, indent=2) + "\n"


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float
    validation_fraction: float
    test_fraction: float
    seed: int = 0

    def __post_init__(self):
        fractions = (self.train_fraction, self.validation_fraction, self.test_fraction)
        for f in fractions:
            if not 0.0 <= f <= 1.0:
                raise ValueError(f"split fraction {f} outside [0, 1]")
        if abs(sum(fractions) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {sum(fractions)}")


def load_corpus(
    source: Union[bytes, str, IO[bytes]],
    source_language: str = "en",
    name: str = "",
) -> Corpus:
    """Parse, normalize, and validate a JSON array of articles.

    Raises CorpusError with a byte offset for malformed JSON, with the
    article index and field name for missing/empty fields, and with the
    offending ids for duplicates.
    """
    if hasattr(source, "read"):
        data = source.read()
    else:
        data = source
    if isinstance(data, bytes):
        text = data.decode("utf-8")
    else:
        text = data

    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        byte_offset = len(text[: exc.pos].encode("utf-8"))
        raise CorpusError(
            f"malformed JSON at byte offset {byte_offset}: {exc.msg}"
        ) from exc

    if not isinstance(raw, list):
        raise CorpusError("corpus input must be a JSON array")

    articles: List[Article] = []
    for index, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise CorpusError(f"article {index}: expected a JSON object")
        values = {}
        for fieldname in REQUIRED_FIELDS:
            value = entry.get(fieldname)
            if not isinstance(value, str):
                raise CorpusError(
                    f"article {index}: field {fieldname!r} missing or not a string"
                )
            values[fieldname] = value if fieldname == "id" else normalize_text(value)
        for fieldname in REQUIRED_FIELDS:
            if not values[fieldname]:
                raise CorpusError(f"article {index}: field {fieldname!r} is empty")
        extra = {k: v for k, v in entry.items() if k not in REQUIRED_FIELDS}
        articles.append(
            Article(values["id"], values["document"], values["summary"], extra)
        )

    seen: Dict[str, int] = {}
    duplicates = []
    for article in articles:
        seen[article.id] = seen.get(article.id, 0) + 1
    duplicates = sorted(aid for aid, count in seen.items() if count > 1)
    if duplicates:
        raise CorpusError(f"duplicate article ids: {', '.join(duplicates)}")

    return Corpus(tuple(articles), source_language=source_language, name=name)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_corpus(corpus: Corpus, spec: SplitSpec) -> Tuple[Corpus, Corpus, Corpus]:
    """Shuffle with the seed, then partition by round(fraction * N).

    Validation and test sizes are rounded half-up; the remainder goes to
    train. Deterministic: equal seeds yield identical partitions.
    """
    n = len(corpus)
    if n == 0:
        raise CorpusError("cannot split an empty corpus")

    n_validation = _round_half_up(spec.validation_fraction * n)
    n_test = _round_half_up(spec.test_fraction * n)
    n_train = n - n_validation - n_test
    if n_train < 0:
        raise CorpusError("rounded split sizes exceed the corpus size")

    order = list(range(n))
    random.Random(spec.seed).shuffle(order)
    shuffled = [corpus.articles[i] for i in order]

    def subset(rows: List[Article], suffix: str) -> Corpus:
        return Corpus(
            tuple(rows),
            source_language=corpus.source_language,
            name=f"{corpus.name}{suffix}" if corpus.name else suffix.lstrip("."),
        )

    train = subset(shuffled[:n_train], ".train")
    validation = subset(shuffled[n_train : n_train + n_validation], ".validation")
    test = subset(shuffled[n_train + n_validation :], ".test")
    return train, validation, test
