"""Four-hop resource diffusion over the bi-layer network and the per-author ranking list.

For a target author the initial resource is split over their topics (step 1)
and, as an independent copy, over their co-authors (step 2). Topics pass their
share on to co-occurring topics (step 3) and co-authors pass theirs on to
their own topics (step 4). A topic's final score is the sum of what it
received in steps 3 and 4; only topics the target is not yet linked to are
ranked. Every hop splits mass in proportion to edge weight, so nodes without
onward edges simply absorb what they receive.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
from scipy import sparse

from knowtraj._io import atomic_write
from knowtraj.errors import DataError, UnknownNodeError
from knowtraj.network import BiLayerNetwork

DEFAULT_TOP_N = 100
TIE_SCALE = 1e12


def _spread(
    m: sparse.csr_matrix, strength: np.ndarray, src: np.ndarray, mass: np.ndarray, n_out: int
) -> np.ndarray:
    """Send ``mass[i]`` from row ``src[i]`` of ``m`` to its columns, proportionally to weight.

    Rows with no entries keep nothing; the result is a dense vector over
    the columns, accumulated in row-then-column order.
    """
    keep = (mass != 0) & (strength[src] > 0)
    src, mass = src[keep], mass[keep]
    if src.size == 0:
        return np.zeros(n_out)
    starts = m.indptr[src]
    lens = m.indptr[src + 1] - starts
    offsets = np.repeat(starts - (np.cumsum(lens) - lens), lens)
    pos = offsets + np.arange(int(lens.sum()))
    share = (m.data[pos] / np.repeat(strength[src], lens)) * np.repeat(mass, lens)
    return np.bincount(m.indices[pos], weights=share, minlength=n_out)


def _mass(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    idx = np.flatnonzero(values)
    return idx, values[idx]


def step1_author_to_topics(net: BiLayerNetwork, target: int | str, r_init: float = 1.0) -> np.ndarray:
    """Resource each topic receives directly from the target author."""
    a = net.author_id(target)
    return _spread(net.at, net.at_strength, np.array([a]), np.array([float(r_init)]), net.topic_count)


def step2_author_to_coauthors(net: BiLayerNetwork, target: int | str, r_init: float = 1.0) -> np.ndarray:
    """Resource each co-author receives from a fresh copy of the target's initial resource."""
    a = net.author_id(target)
    return _spread(net.aa, net.aa_strength, np.array([a]), np.array([float(r_init)]), net.author_count)


def step3_topic_to_topics(net: BiLayerNetwork, topic_direct: np.ndarray) -> np.ndarray:
    """f_t: what each topic collects from its co-occurring, resourced topics."""
    return _spread(net.tt, net.tt_strength, *_mass(np.asarray(topic_direct, dtype=np.float64)), net.topic_count)


def step4_coauthors_to_topics(net: BiLayerNetwork, coauthor: np.ndarray) -> np.ndarray:
    """f_a: what each topic collects from the target's co-authors."""
    return _spread(net.at, net.at_strength, *_mass(np.asarray(coauthor, dtype=np.float64)), net.topic_count)


@dataclass
class ResourceState:
    target: int
    r_init: float
    topic_direct: np.ndarray
    coauthor: np.ndarray
    topic_via_topics: np.ndarray
    topic_via_authors: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.topic_via_topics + self.topic_via_authors


def diffuse(net: BiLayerNetwork, target: int | str, r_init: float = 1.0) -> ResourceState:
    if not r_init > 0:
        raise DataError(f"initial resource must be positive, got {r_init!r}")
    a = net.author_id(target)
    direct = step1_author_to_topics(net, a, r_init)
    co = step2_author_to_coauthors(net, a, r_init)
    return ResourceState(a, float(r_init), direct, co, step3_topic_to_topics(net, direct), step4_coauthors_to_topics(net, co))


def raw_scores(net: BiLayerNetwork, target: int | str, r_init: float = 1.0) -> np.ndarray:
    """Dense f_t + f_a over all topics, before connected topics are dropped."""
    return diffuse(net, target, r_init).total


@dataclass(frozen=True)
class RecommendationList:
    target: str
    entries: tuple[tuple[str, float], ...]
    topic_indices: tuple[int, ...] = ()
    generated_at: float = field(default_factory=time.time, compare=False)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def topics(self) -> list[str]:
        return [t for t, _ in self.entries]

    @property
    def scores(self) -> list[float]:
        return [s for _, s in self.entries]

    def truncated(self, top_n: int) -> "RecommendationList":
        return RecommendationList(self.target, self.entries[:top_n], self.topic_indices[:top_n], self.generated_at)

    def to_json(self) -> dict:
        return {
            "author": self.target,
            "recommendations": [
                {"topic": t, "score": float(f"{s:.12g}"), "rank": rank}
                for rank, (t, s) in enumerate(self.entries, 1)
            ],
        }


def rank_unconnected(net: BiLayerNetwork, target: int, scores: np.ndarray, top_n: int | None = None) -> RecommendationList:
    """Rank topics with positive score that the target is not linked to.

    Order: score descending, then topic index ascending. Scores equal up to
    rounding noise (relative 1e-12 of the list maximum) count as tied, so
    ties in exact arithmetic fall back to the index order.
    """
    mask = scores > 0
    mask[net.at.indices[net.at.indptr[target] : net.at.indptr[target + 1]]] = False
    idx = np.flatnonzero(mask)
    vals = scores[idx]
    key = np.rint(vals * (TIE_SCALE / vals.max())) if vals.size else vals
    order = np.lexsort((idx, -key))
    if top_n is not None:
        order = order[:top_n]
    idx, vals = idx[order], vals[order]
    labels = net.topic_labels
    return RecommendationList(
        net.author_labels[target],
        tuple((labels[j], float(v)) for j, v in zip(idx.tolist(), vals.tolist())),
        tuple(idx.tolist()),
    )


def finalize(
    net: BiLayerNetwork, target: int | str, topic_via_topics: np.ndarray, topic_via_authors: np.ndarray
) -> RecommendationList:
    """Sum both channels and rank the target's unconnected topics."""
    a = net.author_id(target)
    return rank_unconnected(net, a, np.asarray(topic_via_topics) + np.asarray(topic_via_authors))


def recommend(
    net: BiLayerNetwork, target: int | str, top_n: int | None = DEFAULT_TOP_N, r_init: float = 1.0
) -> RecommendationList:
    """Ranked unconnected topics for one author; ``top_n=None`` keeps the full list."""
    if top_n is not None and top_n < 0:
        raise DataError(f"top_n must be non-negative, got {top_n}")
    a = net.author_id(target)
    return rank_unconnected(net, a, raw_scores(net, a, r_init), top_n)


def _resolve_all(net: BiLayerNetwork, targets: Sequence[int | str]) -> list[int]:
    resolved = []
    for t in targets:
        try:
            resolved.append(net.author_id(t))
        except UnknownNodeError:
            raise UnknownNodeError(f"unknown target author {t!r}") from None
    return resolved


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("KNOWTRAJ_WORKERS", "1")))
    except ValueError:
        return 1


def recommend_all(
    net: BiLayerNetwork,
    targets: Sequence[int | str] | None = None,
    top_n: int | None = DEFAULT_TOP_N,
    workers: int | None = None,
    r_init: float = 1.0,
) -> list[RecommendationList]:
    """``recommend`` for every target, in input order. All targets are checked up front."""
    ids = list(range(net.author_count)) if targets is None else _resolve_all(net, targets)
    workers = workers or default_workers()
    if workers <= 1 or len(ids) < 2:
        return [recommend(net, a, top_n, r_init) for a in ids]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda a: recommend(net, a, top_n, r_init), ids))


def write_jsonl(
    lists: Iterable[RecommendationList], path: str | os.PathLike, meta: Mapping[str, object] | None = None
) -> None:
    """One JSON object per author; an optional leading ``{"meta": ...}`` line."""
    with atomic_write(path) as fh:
        if meta:
            fh.write(json.dumps({"meta": dict(meta)}, sort_keys=True, ensure_ascii=False) + "\n")
        for rec in lists:
            fh.write(json.dumps(rec.to_json(), ensure_ascii=False) + "\n")


def read_jsonl(path: str | os.PathLike) -> Iterator[RecommendationList]:
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            obj = json.loads(line)
            if "meta" in obj and "author" not in obj:
                continue
            try:
                items = sorted(obj["recommendations"], key=lambda e: e["rank"])
                yield RecommendationList(str(obj["author"]), tuple((e["topic"], float(e["score"])) for e in items))
            except (KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: malformed recommendation line ({exc})") from None
