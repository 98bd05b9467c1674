"""Bibliographic record ingestion: parsing, author-name canonicalisation, time split."""

from __future__ import annotations

import json
import logging
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence

from knowtraj.errors import DataError

logger = logging.getLogger(__name__)

MIN_YEAR = 1000
MAX_YEAR = 3000
RECORD_FORMATS = ("jsonl", "json")


def _is_edge_char(ch: str) -> bool:
    return ch.isspace() or unicodedata.category(ch).startswith("P")


def _strip_enclosing(text: str) -> str:
    start, end = 0, len(text)
    while start < end and _is_edge_char(text[start]):
        start += 1
    while end > start and _is_edge_char(text[end - 1]):
        end -= 1
    return text[start:end]


def _fold(text: str) -> str:
    text = unicodedata.normalize("NFKC", text)
    text = unicodedata.normalize("NFKC", text.lower())
    text = _strip_enclosing(" ".join(text.split()))
    if text.count(",") == 1:
        last, first = (_strip_enclosing(part) for part in text.split(","))
        text = _strip_enclosing(" ".join(f"{first} {last}".split()))
    return text


def canonicalize_name(raw_name: str) -> str:
    """Return the string-level identity key for an author name.

    NFKC-normalised, lowercased, enclosing punctuation stripped and whitespace
    collapsed; a single comma is read as ``"Last, First"`` and reordered.
    No initial expansion is attempted, so ``"Garfield, E"`` stays distinct
    from ``"Eugene Garfield"``. Returns ``""`` for names that normalise to
    nothing (unidentifiable).

    >>> canonicalize_name("Garfield, Eugene")
    'eugene garfield'
    """
    text = raw_name
    # a few exotic code points only settle after a second pass
    for _ in range(4):
        folded = _fold(text)
        if folded == text:
            break
        text = folded
    return text


def topic_key(label: str) -> str:
    """Comparison key for topic labels: case-insensitive, whitespace-collapsed."""
    return " ".join(unicodedata.normalize("NFKC", label).casefold().split())


@dataclass(frozen=True)
class AuthorRef:
    raw_name: str
    source_id: str | None = None
    canonical_key: str = ""

    @classmethod
    def from_raw(cls, raw_name: str, source_id: str | None = None) -> "AuthorRef":
        sid = str(source_id).strip() if source_id not in (None, "") else None
        return cls(raw_name=raw_name, source_id=sid or None, canonical_key=canonicalize_name(raw_name))

    @property
    def identity(self) -> str:
        return self.source_id if self.source_id else self.canonical_key

    @property
    def identifiable(self) -> bool:
        return bool(self.identity)


@dataclass(frozen=True)
class TopicTag:
    label: str
    weight: float = 1.0

    def __post_init__(self) -> None:
        label = " ".join(self.label.split())
        if not label:
            raise DataError("topic label is empty after trimming")
        if not self.weight > 0:
            raise DataError(f"topic weight must be positive, got {self.weight!r} for {label!r}")
        object.__setattr__(self, "label", label)

    @property
    def key(self) -> str:
        return topic_key(self.label)


def _dedup(items: Iterable[Any], key) -> tuple:
    seen: set[str] = set()
    out = []
    for item in items:
        k = key(item)
        if k not in seen:
            seen.add(k)
            out.append(item)
    return tuple(out)


@dataclass(frozen=True)
class BiblioRecord:
    """One publication. Duplicate authors/topics are collapsed on construction."""

    record_id: str
    year: int
    authors: tuple[AuthorRef, ...] = ()
    topics: tuple[TopicTag, ...] = ()

    def __post_init__(self) -> None:
        if not str(self.record_id).strip():
            raise DataError("record_id must be non-empty")
        if isinstance(self.year, bool) or not isinstance(self.year, int):
            raise DataError(f"year must be an integer, got {self.year!r}")
        if not MIN_YEAR <= self.year <= MAX_YEAR:
            raise DataError(f"year {self.year} outside [{MIN_YEAR}, {MAX_YEAR}]")
        object.__setattr__(self, "authors", _dedup(self.authors, lambda a: a.identity))
        object.__setattr__(self, "topics", _dedup(self.topics, lambda t: t.key))


@dataclass
class ParseResult:
    records: list[BiblioRecord]
    skipped: int = 0
    dropped_authors: int = 0
    skip_reasons: dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[BiblioRecord]:
        return iter(self.records)


@dataclass(frozen=True)
class CorpusSplit:
    cutoff_year: int
    train: list[BiblioRecord]
    test: list[BiblioRecord]

    @property
    def total(self) -> int:
        return len(self.train) + len(self.test)

    @property
    def train_share(self) -> float:
        return len(self.train) / self.total if self.total else 0.0

    @property
    def test_share(self) -> float:
        return len(self.test) / self.total if self.total else 0.0


class _Skip(Exception):
    pass


def _parse_year(value: Any) -> int:
    if isinstance(value, bool) or value is None:
        raise _Skip("bad year")
    if isinstance(value, float):
        if not value.is_integer():
            raise _Skip("bad year")
        value = int(value)
    try:
        year = int(str(value).strip())
    except ValueError:
        raise _Skip("bad year") from None
    if not MIN_YEAR <= year <= MAX_YEAR:
        raise _Skip("year out of range")
    return year


def _parse_authors(raw: Any) -> tuple[list[AuthorRef], int]:
    if raw is None:
        return [], 0
    if not isinstance(raw, list):
        raise _Skip("authors not a list")
    authors, dropped = [], 0
    for entry in raw:
        if isinstance(entry, str):
            ref = AuthorRef.from_raw(entry)
        elif isinstance(entry, dict):
            ref = AuthorRef.from_raw(str(entry.get("name") or ""), entry.get("id"))
        else:
            raise _Skip("bad author entry")
        if ref.identifiable:
            authors.append(ref)
        else:
            dropped += 1
    return authors, dropped


def _parse_topics(raw: Any) -> list[TopicTag]:
    if raw is None:
        return []
    if not isinstance(raw, list):
        raise _Skip("fos not a list")
    topics = []
    for entry in raw:
        if isinstance(entry, str):
            name, weight = entry, None
        elif isinstance(entry, dict):
            name, weight = entry.get("name"), entry.get("w")
        else:
            raise _Skip("bad fos entry")
        if not isinstance(name, str) or not name.strip():
            continue
        try:
            w = float(weight) if weight is not None else 1.0
        except (TypeError, ValueError):
            w = 1.0
        # zero/negative confidences occur in real dumps; keep the tag, drop the weight
        topics.append(TopicTag(name, w if w > 0 else 1.0))
    return topics


def record_from_dict(obj: Any) -> tuple[BiblioRecord, int]:
    """Build a record from one AMiner-style object. Raises ``DataError`` if malformed."""
    try:
        if not isinstance(obj, dict):
            raise _Skip("entry not an object")
        rid = obj.get("id")
        if rid is None or not str(rid).strip():
            raise _Skip("missing id")
        if "year" not in obj:
            raise _Skip("missing year")
        year = _parse_year(obj["year"])
        authors, dropped = _parse_authors(obj.get("authors"))
        topics = _parse_topics(obj.get("fos"))
    except _Skip as exc:
        raise DataError(str(exc)) from None
    return BiblioRecord(str(rid).strip(), year, tuple(authors), tuple(topics)), dropped


def _iter_entries(path: Path, fmt: str) -> Iterator[tuple[int, Any]]:
    if fmt == "jsonl":
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    yield lineno, json.loads(line)
                except json.JSONDecodeError:
                    yield lineno, _Skip("invalid json")
    else:
        with path.open(encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, list):
            raise DataError(f"{path}: expected a JSON array of records")
        yield from enumerate(data, 1)


def parse_corpus(path: str | Path, format: str = "jsonl") -> ParseResult:
    """Parse a record file into ``BiblioRecord`` objects, in file order.

    ``jsonl`` holds one object per line; ``json`` is a single array (the
    DBLP-citation-network v12 layout). Each object needs ``id`` and ``year``;
    ``authors`` is a list of ``{"name", "id"?}`` and ``fos`` a list of
    ``{"name", "w"?}``. Malformed entries and repeated ids are skipped and
    counted. Authors whose name normalises to nothing and who carry no id
    are dropped and counted in ``dropped_authors``.
    """
    if format not in RECORD_FORMATS:
        raise DataError(f"unsupported record format {format!r}; expected one of {RECORD_FORMATS}")
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"cannot read corpus file: {path}")

    result = ParseResult(records=[])
    seen_ids: set[str] = set()
    for lineno, obj in _iter_entries(path, format):
        try:
            if isinstance(obj, _Skip):
                raise DataError(str(obj))
            record, dropped = record_from_dict(obj)
            if record.record_id in seen_ids:
                raise DataError("duplicate id")
        except DataError as exc:
            reason = str(exc)
            result.skipped += 1
            result.skip_reasons[reason] = result.skip_reasons.get(reason, 0) + 1
            logger.debug("%s:%d skipped (%s)", path, lineno, reason)
            continue
        seen_ids.add(record.record_id)
        result.dropped_authors += dropped
        result.records.append(record)

    if result.skipped:
        logger.warning("%s: skipped %d malformed entries", path, result.skipped)
    if result.dropped_authors:
        logger.warning("%s: dropped %d unidentifiable author names", path, result.dropped_authors)
    return result


def split_by_year(corpus: Sequence[BiblioRecord], cutoff_year: int) -> CorpusSplit:
    """Partition into ``year <= cutoff_year`` (train) and ``year > cutoff_year`` (test)."""
    if not corpus:
        raise DataError("cannot split an empty corpus")
    train = [r for r in corpus if r.year <= cutoff_year]
    test = [r for r in corpus if r.year > cutoff_year]
    if not train or not test:
        logger.warning(
            "split at %d leaves %s set empty; evaluation is impossible",
            cutoff_year,
            "training" if not train else "testing",
        )
    return CorpusSplit(cutoff_year, train, test)
