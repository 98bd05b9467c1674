"""Seeded synthetic corpora for benchmarks and end-to-end tests.

Authors belong to research groups, topics to clusters, and each group
works on a couple of home clusters. Records up to ``cutoff_year`` draw
topics from the home clusters. Later records plant new author–topic links
along weighted paths of the earlier network: via a co-author's topics or via
topics co-occurring with the author's own, plus a share of uniform noise.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from knowtraj.network import BiLayerNetwork, build_network
from knowtraj.records import AuthorRef, BiblioRecord, TopicTag


def _pick(rng: np.random.Generator, idx: np.ndarray, w: np.ndarray) -> int:
    return int(idx[rng.choice(idx.size, p=w / w.sum())])


def planted_corpus(
    n_records: int = 3000,
    n_groups: int = 60,
    group_size: int = 8,
    n_clusters: int = 40,
    cluster_size: int = 12,
    start_year: int = 2006,
    cutoff_year: int = 2015,
    end_year: int = 2020,
    test_share: float = 0.25,
    noise: float = 0.1,
    seed: int = 7,
) -> list[BiblioRecord]:
    rng = np.random.default_rng(seed)
    authors = [f"a{g:04d}-{m:02d}" for g in range(n_groups) for m in range(group_size)]
    topics = [f"topic {c:03d}.{k:02d}" for c in range(n_clusters) for k in range(cluster_size)]
    home = [rng.choice(n_clusters, size=2, replace=False) for _ in range(n_groups)]
    # skewed in-cluster popularity so co-occurrence weights carry information
    popularity = rng.zipf(1.6, size=len(topics)).clip(max=50).astype(float)

    def make(rid: int, year: int, a_ids, t_ids) -> BiblioRecord:
        return BiblioRecord(
            f"R{rid:06d}",
            int(year),
            tuple(AuthorRef.from_raw(authors[a].replace("-", " "), authors[a]) for a in a_ids),
            tuple(TopicTag(topics[t]) for t in t_ids),
        )

    def team(g: int) -> list[int]:
        size = int(rng.integers(1, 5))
        members = list(rng.choice(group_size, size=min(size, group_size), replace=False) + g * group_size)
        if rng.random() < 0.15:
            members.append(int(rng.integers(len(authors))))
        return members

    n_test = int(round(n_records * test_share))
    n_train = n_records - n_test
    records = []
    for rid in range(n_train):
        g = int(rng.integers(n_groups))
        pool = np.concatenate([np.arange(c * cluster_size, (c + 1) * cluster_size) for c in home[g]])
        k = int(rng.integers(2, 5))
        t_ids = rng.choice(pool, size=k, replace=False, p=popularity[pool] / popularity[pool].sum())
        records.append(make(rid, rng.integers(start_year, cutoff_year + 1), team(g), t_ids))

    past = build_network(records)
    a_pos = {label: i for i, label in enumerate(past.author_labels)}
    t_pos = {t: j for j, t in enumerate(topics)}
    t_of_net = np.array([t_pos[label] for label in past.topic_labels])

    for rid in range(n_train, n_records):
        g = int(rng.integers(n_groups))
        members = team(g)
        lead = a_pos.get(authors[members[0]])
        chosen: list[int] = []
        for _ in range(int(rng.integers(2, 5))):
            u = rng.random()
            t = None
            if lead is not None and u >= noise:
                if u < noise + (1 - noise) / 2:
                    co, w = past.coauthors(lead)
                    if co.size:
                        c = _pick(rng, co, w)
                        ts, tw = past.topics_of(c)
                        if ts.size:
                            t = t_of_net[_pick(rng, ts, tw)]
                else:
                    own, ow = past.topics_of(lead)
                    if own.size:
                        j = _pick(rng, own, ow)
                        nb, nw = past.topic_neighbors(j)
                        if nb.size:
                            t = t_of_net[_pick(rng, nb, nw)]
            if t is None:
                t = int(rng.integers(len(topics)))
            chosen.append(int(t))
        records.append(make(rid, rng.integers(cutoff_year + 1, end_year + 1), members, chosen))
    return records


def scaled_corpus(n_records: int, seed: int = 11) -> list[BiblioRecord]:
    """A planted corpus whose population grows with ``n_records``."""
    groups = max(10, n_records // 12)
    clusters = max(8, n_records // 60)
    return planted_corpus(n_records, n_groups=groups, n_clusters=clusters, seed=seed)


def write_jsonl(records, path: str | os.PathLike) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(
                json.dumps(
                    {
                        "id": r.record_id,
                        "year": r.year,
                        "authors": [{"id": a.source_id, "name": a.raw_name} for a in r.authors],
                        "fos": [{"name": t.label, "w": t.weight} for t in r.topics],
                    }
                )
                + "\n"
            )


def random_network(
    rng: np.random.Generator,
    n_authors: int,
    n_topics: int,
    density: float = 0.15,
    max_weight: int = 5,
    integer: bool = True,
) -> BiLayerNetwork:
    """Random bi-layer network with independent edge draws per layer."""

    def draw(shape, upper):
        mask = rng.random(shape) < density
        if upper:
            mask = np.triu(mask, k=1)
        rows, cols = np.nonzero(mask)
        if integer:
            w = rng.integers(1, max_weight + 1, size=rows.size)
        else:
            w = rng.uniform(0.05, max_weight, size=rows.size)
        return list(zip(rows.tolist(), cols.tolist(), w.tolist()))

    aa = draw((n_authors, n_authors), True)
    tt = draw((n_topics, n_topics), True)
    at = draw((n_authors, n_topics), False)
    return BiLayerNetwork.from_edges(
        [f"author{i}" for i in range(n_authors)], [f"topic{j}" for j in range(n_topics)], aa, tt, at
    )
