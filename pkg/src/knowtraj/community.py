"""Community-level digests of per-author recommendations.

Community labels come from outside (e.g. a Leiden run); this module only
counts. A topic counts once per author who was recommended it within their
top-n, and diversity is measured on those counts.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from knowtraj._io import atomic_write, header_line
from knowtraj.diffusion import RecommendationList
from knowtraj.errors import DataError
from knowtraj.network import BiLayerNetwork
from knowtraj.records import topic_key

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CommunityAssignment:
    kind: str
    mapping: Mapping[str, int]

    def __post_init__(self) -> None:
        if self.kind not in ("author", "topic"):
            raise DataError(f"community kind must be 'author' or 'topic', got {self.kind!r}")
        norm = {}
        for ident, cid in self.mapping.items():
            if isinstance(cid, bool) or not isinstance(cid, (int, np.integer)) or cid < 0:
                raise DataError(f"community id for {ident!r} must be a non-negative integer, got {cid!r}")
            norm[self._key(ident)] = int(cid)
        object.__setattr__(self, "mapping", norm)

    def _key(self, ident: str) -> str:
        return topic_key(ident) if self.kind == "topic" else ident

    def get(self, ident: str) -> int | None:
        return self.mapping.get(self._key(ident))

    def sizes(self) -> dict[int, int]:
        out: dict[int, int] = defaultdict(int)
        for cid in self.mapping.values():
            out[cid] += 1
        return dict(sorted(out.items()))

    def validate(self, net: BiLayerNetwork) -> None:
        known = net.author_index if self.kind == "author" else net.topic_index
        missing = [i for i in self.mapping if i not in known]
        if missing:
            raise DataError(f"{len(missing)} {self.kind} identities not in the network, e.g. {missing[0]!r}")

    @classmethod
    def from_tsv(cls, path: str | os.PathLike, kind: str) -> "CommunityAssignment":
        """Two columns: identity, community id. ``#`` lines are comments."""
        mapping: dict[str, int] = {}
        with Path(path).open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 2:
                    raise DataError(f"{path}:{lineno}: expected 'identity<TAB>community'")
                try:
                    mapping[parts[0]] = int(parts[1])
                except ValueError:
                    raise DataError(f"{path}:{lineno}: community id {parts[1]!r} is not an integer") from None
        return cls(kind, mapping)


@dataclass(frozen=True)
class CommunityDigest:
    community: int
    size: int
    topic_counts: dict[str, int]
    entropy: float | None
    hhi: float | None

    def top(self, n: int = 10) -> list[tuple[str, int]]:
        return list(self.topic_counts.items())[:n]

    def to_json(self) -> dict:
        return {
            "community": self.community,
            "size": self.size,
            "entropy": self.entropy,
            "hhi": self.hhi,
            "topics": [{"topic": t, "authors": c} for t, c in self.topic_counts.items()],
        }


def diversity(digest: CommunityDigest | Mapping[str, int]) -> tuple[float, float]:
    """(Shannon entropy in nats, Herfindahl–Hirschman index) of recommendation-count shares."""
    counts = digest.topic_counts if isinstance(digest, CommunityDigest) else digest
    values = [c for _, c in sorted(counts.items()) if c > 0]
    if not values:
        raise DataError("diversity is undefined for empty topic counts")
    total = float(sum(values))
    shares = [c / total for c in values]
    entropy = -sum(p * math.log(p) for p in shares)
    hhi = sum(p * p for p in shares)
    return max(entropy, 0.0), hhi


def _topn(recs: Iterable[RecommendationList], top_n: int | None):
    for rec in recs:
        entries = rec.entries if top_n is None else rec.entries[:top_n]
        yield rec.target, list(dict.fromkeys(t for t, _ in entries))


def aggregate_by_community(
    recs: Sequence[RecommendationList], authors: CommunityAssignment, top_n: int | None = 10
) -> list[CommunityDigest]:
    """Per author community: how many distinct members were recommended each topic."""
    if authors.kind != "author":
        raise DataError("aggregate_by_community needs an author assignment")
    counts: dict[int, dict[str, int]] = defaultdict(lambda: defaultdict(int))
    unmapped = 0
    for author, topics in _topn(recs, top_n):
        cid = authors.get(author)
        if cid is None:
            unmapped += 1
            continue
        for t in topics:
            counts[cid][t] += 1
    if unmapped:
        logger.warning("%d recommendation lists belong to authors without a community", unmapped)

    digests = []
    for cid, size in authors.sizes().items():
        ordered = dict(sorted(counts.get(cid, {}).items(), key=lambda kv: (-kv[1], kv[0])))
        ent, hhi = diversity(ordered) if ordered else (None, None)
        digests.append(CommunityDigest(cid, size, ordered, ent, hhi))
    return digests


@dataclass(frozen=True)
class CrossDistribution:
    author_communities: list[int]
    topic_communities: list[int]
    counts: np.ndarray
    dropped: int = 0

    def row(self, author_community: int) -> np.ndarray:
        return self.counts[self.author_communities.index(author_community)]


def cross_distribution(
    recs: Sequence[RecommendationList],
    authors: CommunityAssignment,
    topics: CommunityAssignment,
    top_n: int | None = None,
) -> CrossDistribution:
    """Count (author, recommended topic) incidences per (author community, topic community).

    Incidences whose author or topic has no community are dropped and counted.
    """
    if authors.kind != "author" or topics.kind != "topic":
        raise DataError("cross_distribution needs an author and a topic assignment")
    rows = sorted(set(authors.mapping.values()))
    cols = sorted(set(topics.mapping.values()))
    r_pos = {c: i for i, c in enumerate(rows)}
    c_pos = {c: i for i, c in enumerate(cols)}
    counts = np.zeros((len(rows), len(cols)), dtype=np.int64)
    dropped = 0
    for author, recommended in _topn(recs, top_n):
        a_cid = authors.get(author)
        for t in recommended:
            t_cid = topics.get(t)
            if a_cid is None or t_cid is None:
                dropped += 1
                continue
            counts[r_pos[a_cid], c_pos[t_cid]] += 1
    if dropped:
        logger.warning("%d recommendation incidences lack an author or topic community", dropped)
    return CrossDistribution(rows, cols, counts, dropped)


def write_digests(
    digests: Sequence[CommunityDigest], path: str | os.PathLike, meta: Mapping[str, object] | None = None
) -> None:
    payload = {"meta": dict(meta or {}), "communities": [d.to_json() for d in digests]}
    with atomic_write(path) as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=1, sort_keys=True)
        fh.write("\n")


def write_cross_csv(cross: CrossDistribution, path: str | os.PathLike, meta: Mapping[str, object] | None = None) -> None:
    with atomic_write(path, newline="") as fh:
        fh.write(header_line(meta))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["author_community", *[f"topic_community_{c}" for c in cross.topic_communities], "total"])
        for cid, row in zip(cross.author_communities, cross.counts.tolist()):
            w.writerow([cid, *row, sum(row)])
