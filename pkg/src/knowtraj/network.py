"""Bi-layer author/topic network: co-authorship, co-topic and author–topic edge sets."""

from __future__ import annotations

import csv
import itertools
import json
import os
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

from knowtraj._io import atomic_write, header_line
from knowtraj.errors import DataError, UnknownNodeError
from knowtraj.records import BiblioRecord, topic_key

def _symmetric_csr(n: int, rows: np.ndarray, cols: np.ndarray, weights: np.ndarray) -> sparse.csr_matrix:
    """Undirected CSR from one entry per (possibly repeated) pair; repeats are summed."""
    r = np.concatenate([rows, cols])
    c = np.concatenate([cols, rows])
    w = np.concatenate([weights, weights]).astype(np.float64)
    m = sparse.coo_matrix((w, (r, c)), shape=(n, n)).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m


def _rect_csr(shape: tuple[int, int], rows, cols, weights) -> sparse.csr_matrix:
    m = sparse.coo_matrix(
        (np.asarray(weights, dtype=np.float64), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
        shape=shape,
    ).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m


@dataclass(frozen=True, eq=False)
class BiLayerNetwork:
    """Immutable bi-layer network.

    ``aa`` (authors x authors, weight theta) and ``tt`` (topics x topics,
    weight phi) are symmetric CSR matrices without diagonal; ``at``
    (authors x topics, weight mu) holds the cross-layer edges. Node indices
    are dense and follow first-seen order. ``topic_labels`` keeps the label
    verbatim; lookups go through the case/whitespace-insensitive key.
    """

    author_labels: tuple[str, ...]
    topic_labels: tuple[str, ...]
    aa: sparse.csr_matrix
    tt: sparse.csr_matrix
    at: sparse.csr_matrix
    semantic: bool = False

    @property
    def author_count(self) -> int:
        return len(self.author_labels)

    @property
    def topic_count(self) -> int:
        return len(self.topic_labels)

    @cached_property
    def author_index(self) -> dict[str, int]:
        return {label: i for i, label in enumerate(self.author_labels)}

    @cached_property
    def topic_index(self) -> dict[str, int]:
        return {topic_key(label): j for j, label in enumerate(self.topic_labels)}

    @cached_property
    def ta(self) -> sparse.csr_matrix:
        m = self.at.T.tocsr()
        m.sort_indices()
        return m

    @cached_property
    def aa_strength(self) -> np.ndarray:
        return np.asarray(self.aa.sum(axis=1)).ravel()

    @cached_property
    def tt_strength(self) -> np.ndarray:
        return np.asarray(self.tt.sum(axis=1)).ravel()

    @cached_property
    def at_strength(self) -> np.ndarray:
        return np.asarray(self.at.sum(axis=1)).ravel()

    def author_id(self, author: int | str) -> int:
        if isinstance(author, (int, np.integer)) and not isinstance(author, bool):
            if 0 <= author < self.author_count:
                return int(author)
            raise UnknownNodeError(f"author index {author} out of range [0, {self.author_count})")
        try:
            return self.author_index[author]
        except (KeyError, TypeError):
            raise UnknownNodeError(f"unknown author {author!r}") from None

    def topic_id(self, topic: int | str) -> int:
        if isinstance(topic, (int, np.integer)) and not isinstance(topic, bool):
            if 0 <= topic < self.topic_count:
                return int(topic)
            raise UnknownNodeError(f"topic index {topic} out of range [0, {self.topic_count})")
        try:
            return self.topic_index[topic_key(topic)]
        except (KeyError, TypeError, AttributeError):
            raise UnknownNodeError(f"unknown topic {topic!r}") from None

    @staticmethod
    def _row(m: sparse.csr_matrix, i: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = m.indptr[i], m.indptr[i + 1]
        return m.indices[lo:hi], m.data[lo:hi]

    def coauthors(self, author: int | str) -> tuple[np.ndarray, np.ndarray]:
        """(neighbor indices, theta weights), sorted by index."""
        return self._row(self.aa, self.author_id(author))

    def topics_of(self, author: int | str) -> tuple[np.ndarray, np.ndarray]:
        return self._row(self.at, self.author_id(author))

    def authors_of(self, topic: int | str) -> tuple[np.ndarray, np.ndarray]:
        return self._row(self.ta, self.topic_id(topic))

    def topic_neighbors(self, topic: int | str) -> tuple[np.ndarray, np.ndarray]:
        return self._row(self.tt, self.topic_id(topic))

    def theta(self, a: int | str, b: int | str) -> float:
        return float(self.aa[self.author_id(a), self.author_id(b)])

    def phi(self, s: int | str, t: int | str) -> float:
        return float(self.tt[self.topic_id(s), self.topic_id(t)])

    def mu(self, a: int | str, t: int | str) -> float:
        return float(self.at[self.author_id(a), self.topic_id(t)])

    def edge_counts(self) -> tuple[int, int, int]:
        """Undirected edge counts for (E_aa, E_tt, E_at)."""
        return self.aa.nnz // 2, self.tt.nnz // 2, self.at.nnz

    def with_weights_scaled(self, factor: float) -> "BiLayerNetwork":
        return BiLayerNetwork(
            self.author_labels, self.topic_labels, self.aa * factor, self.tt * factor, self.at * factor, self.semantic
        )

    def validate(self) -> list[str]:
        """Return a list of invariant violations (empty when the network is sound)."""
        problems = []
        for name, m in (("aa", self.aa), ("tt", self.tt)):
            if m.shape[0] != m.shape[1]:
                problems.append(f"{name}: not square")
                continue
            if m.diagonal().any():
                problems.append(f"{name}: self-loop present")
            if (abs(m - m.T) > 0).nnz:
                problems.append(f"{name}: asymmetric weights")
        if self.aa.shape[0] != self.author_count or self.at.shape != (self.author_count, self.topic_count):
            problems.append("shape does not match label maps")
        if self.tt.shape[0] != self.topic_count:
            problems.append("tt shape does not match topic labels")
        for name, m in (("aa", self.aa), ("tt", self.tt), ("at", self.at)):
            if m.nnz and not (m.data > 0).all():
                problems.append(f"{name}: non-positive weight stored")
            if m.nnz and not np.isfinite(m.data).all():
                problems.append(f"{name}: non-finite weight stored")
        if self.semantic and self.tt.nnz and self.tt.data.max() > 1.0:
            problems.append("tt: semantic weight above 1")
        return problems

    @classmethod
    def from_edges(
        cls,
        author_labels: Sequence[str],
        topic_labels: Sequence[str],
        aa: Mapping[tuple[int, int], float] | Iterable[tuple[int, int, float]] = (),
        tt: Mapping[tuple[int, int], float] | Iterable[tuple[int, int, float]] = (),
        at: Mapping[tuple[int, int], float] | Iterable[tuple[int, int, float]] = (),
        semantic: bool = False,
    ) -> "BiLayerNetwork":
        """Assemble a network from explicit edge lists (one entry per undirected edge)."""
        n_a, n_t = len(author_labels), len(topic_labels)
        if len(set(author_labels)) != n_a:
            raise DataError("duplicate author labels")
        if len({topic_key(t) for t in topic_labels}) != n_t:
            raise DataError("duplicate topic labels")

        def triples(edges, n_rows, n_cols, undirected, name):
            items = edges.items() if isinstance(edges, Mapping) else ((e[:2], e[2]) for e in edges)
            rows, cols, ws, seen = [], [], [], set()
            for (u, v), w in items:
                u, v = int(u), int(v)
                if not (0 <= u < n_rows and 0 <= v < n_cols):
                    raise DataError(f"{name}: edge ({u}, {v}) out of range")
                if undirected and u == v:
                    raise DataError(f"{name}: self-loop on {u}")
                if not w > 0:
                    raise DataError(f"{name}: non-positive weight {w!r} on ({u}, {v})")
                key = (min(u, v), max(u, v)) if undirected else (u, v)
                if key in seen:
                    raise DataError(f"{name}: duplicate edge {key}")
                seen.add(key)
                rows.append(u)
                cols.append(v)
                ws.append(float(w))
            return np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64), np.array(ws, dtype=np.float64)

        aa_m = _symmetric_csr(n_a, *triples(aa, n_a, n_a, True, "aa"))
        tt_m = _symmetric_csr(n_t, *triples(tt, n_t, n_t, True, "tt"))
        r, c, w = triples(at, n_a, n_t, False, "at")
        at_m = _rect_csr((n_a, n_t), r, c, w)
        return cls(tuple(author_labels), tuple(topic_labels), aa_m, tt_m, at_m, semantic)


def build_network(records: Sequence[BiblioRecord]) -> BiLayerNetwork:
    """Count co-occurrences: +1 per record for every author pair, topic pair and author–topic pair.

    Topic tag confidences are ignored; nodes that form no pair are still
    registered.
    """
    if not records:
        raise DataError("cannot build a network from zero records")
    author_index: dict[str, int] = {}
    topic_index: dict[str, int] = {}
    topic_labels: list[str] = []
    aa_r, aa_c, tt_r, tt_c, at_r, at_c = [], [], [], [], [], []

    for rec in records:
        a_ids = [author_index.setdefault(a.identity, len(author_index)) for a in rec.authors]
        t_ids = []
        for t in rec.topics:
            j = topic_index.get(t.key)
            if j is None:
                j = topic_index[t.key] = len(topic_labels)
                topic_labels.append(t.label)
            t_ids.append(j)
        for u, v in itertools.combinations(a_ids, 2):
            aa_r.append(u)
            aa_c.append(v)
        for u, v in itertools.combinations(t_ids, 2):
            tt_r.append(u)
            tt_c.append(v)
        for u in a_ids:
            at_r.extend([u] * len(t_ids))
            at_c.extend(t_ids)

    n_a, n_t = len(author_index), len(topic_labels)
    ones = np.ones
    aa = _symmetric_csr(n_a, np.array(aa_r, dtype=np.int64), np.array(aa_c, dtype=np.int64), ones(len(aa_r)))
    tt = _symmetric_csr(n_t, np.array(tt_r, dtype=np.int64), np.array(tt_c, dtype=np.int64), ones(len(tt_r)))
    at = _rect_csr((n_a, n_t), at_r, at_c, ones(len(at_r)))
    return BiLayerNetwork(tuple(author_index), tuple(topic_labels), aa, tt, at)


@dataclass(frozen=True)
class NetworkStats:
    author_nodes: int
    topic_nodes: int
    aa_edges: int
    tt_edges: int
    at_edges: int
    at_authors: int
    at_topics: int
    papers: int
    paper_share: float | None = None

    @property
    def at_participants(self) -> int:
        return self.at_authors + self.at_topics

    @property
    def total_edges(self) -> int:
        return self.aa_edges + self.tt_edges + self.at_edges

    def as_dict(self) -> dict:
        return {
            "co_authorship": {"nodes": self.author_nodes, "edges": self.aa_edges},
            "co_topic": {"nodes": self.topic_nodes, "edges": self.tt_edges},
            "author_topic": {
                "nodes": self.at_participants,
                "authors": self.at_authors,
                "topics": self.at_topics,
                "edges": self.at_edges,
            },
            "edges_total": self.total_edges,
            "papers": self.papers,
            "paper_share": self.paper_share,
        }


def network_stats(
    net: BiLayerNetwork, records: Sequence[BiblioRecord] | None = None, corpus_size: int | None = None
) -> NetworkStats:
    """Per-layer node/edge counts in the layout of the train/test statistics table."""
    aa_e, tt_e, at_e = net.edge_counts()
    at_authors = int(np.count_nonzero(np.diff(net.at.indptr)))
    at_topics = int(np.count_nonzero(np.diff(net.ta.indptr)))
    papers = len(records) if records is not None else 0
    share = papers / corpus_size if corpus_size else None
    return NetworkStats(net.author_count, net.topic_count, aa_e, tt_e, at_e, at_authors, at_topics, papers, share)


SIM_EPS = 1e-12


@dataclass(frozen=True)
class SemanticLayerConfig:
    vectors: Mapping[str, Sequence[float]]
    similarity_floor: float = 0.0

    def __post_init__(self) -> None:
        if not -1.0 <= self.similarity_floor <= 1.0:
            raise DataError(f"similarity_floor must lie in [-1, 1], got {self.similarity_floor}")


def build_semantic_layer(
    net: BiLayerNetwork, cfg: SemanticLayerConfig, chunk_rows: int = 1024
) -> BiLayerNetwork:
    """Copy of ``net`` whose topic layer holds cosine similarities above the floor.

    Only strictly positive similarities become edges regardless of the
    floor, so weights stay in (0, 1]. Similarities within ``SIM_EPS`` of the
    threshold count as not exceeding it, so orthogonal vectors never link
    through rounding noise.
    """
    by_key = {topic_key(k): v for k, v in cfg.vectors.items()}
    rows = []
    dim = None
    for label in net.topic_labels:
        vec = by_key.get(topic_key(label))
        if vec is None:
            raise DataError(f"no vector for topic {label!r}")
        vec = np.asarray(vec, dtype=np.float64).ravel()
        if dim is None:
            dim = vec.shape[0]
        if vec.shape[0] != dim or dim < 1:
            raise DataError(f"vector for topic {label!r} has dimension {vec.shape[0]}, expected {dim}")
        norm = np.linalg.norm(vec)
        if not norm > 0 or not np.isfinite(norm):
            raise DataError(f"zero-norm vector for topic {label!r}")
        rows.append(vec / norm)

    n_t = net.topic_count
    unit = np.vstack(rows) if rows else np.zeros((0, 1))
    floor = max(cfg.similarity_floor, 0.0) + SIM_EPS
    r_parts, c_parts, w_parts = [], [], []
    for lo in range(0, n_t, chunk_rows):
        block = unit[lo : lo + chunk_rows] @ unit.T
        np.clip(block, -1.0, 1.0, out=block)
        ii, jj = np.nonzero(block > floor)
        keep = jj > ii + lo
        r_parts.append(ii[keep] + lo)
        c_parts.append(jj[keep])
        w_parts.append(block[ii[keep], jj[keep]])
    cat = lambda parts, dt: np.concatenate(parts).astype(dt) if parts else np.zeros(0, dtype=dt)  # noqa: E731
    tt = _symmetric_csr(n_t, cat(r_parts, np.int64), cat(c_parts, np.int64), cat(w_parts, np.float64))
    return BiLayerNetwork(net.author_labels, net.topic_labels, net.aa, tt, net.at, semantic=True)


def load_vectors(path: str | os.PathLike) -> dict[str, list[float]]:
    """Read topic vectors: one ``label<TAB>v1 v2 ...`` (or JSON object) per line."""
    path = Path(path)
    if path.suffix == ".json":
        with path.open(encoding="utf-8") as fh:
            return {str(k): list(map(float, v)) for k, v in json.load(fh).items()}
    vectors = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line.startswith("#"):
                continue
            try:
                label, values = line.rstrip("\n").split("\t", 1)
                vectors[label] = [float(x) for x in values.replace(",", " ").split()]
            except ValueError:
                raise DataError(f"{path}:{lineno}: expected 'label<TAB>numbers'") from None
    return vectors


def _fmt_weight(w: float) -> str:
    return str(int(w)) if float(w).is_integer() else repr(float(w))


def export_tsv(net: BiLayerNetwork, directory: str | os.PathLike, meta: Mapping[str, object] | None = None) -> None:
    """Write ``aa.tsv``, ``tt.tsv``, ``at.tsv``, ``authors.tsv``, ``topics.tsv`` in index order."""
    directory = Path(directory)
    head = header_line(meta)
    for name, labels in (("authors.tsv", net.author_labels), ("topics.tsv", net.topic_labels)):
        with atomic_write(directory / name) as fh:
            fh.write(head)
            for i, label in enumerate(labels):
                fh.write(f"{i}\t{label}\n")
    for name, m, upper in (("aa.tsv", net.aa, True), ("tt.tsv", net.tt, True), ("at.tsv", net.at, False)):
        coo = m.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with atomic_write(directory / name) as fh:
            fh.write(head)
            for k in order:
                i, j = int(coo.row[k]), int(coo.col[k])
                if upper and j <= i:
                    continue
                fh.write(f"{i}\t{j}\t{_fmt_weight(coo.data[k])}\n")


def _read_rows(path: Path) -> Iterable[list[str]]:
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            yield line.rstrip("\n").split("\t")


def import_tsv(directory: str | os.PathLike, semantic: bool = False) -> BiLayerNetwork:
    directory = Path(directory)
    authors = [row[1] for row in _read_rows(directory / "authors.tsv")]
    topics = [row[1] for row in _read_rows(directory / "topics.tsv")]

    def edges(name):
        return [(int(r[0]), int(r[1]), float(r[2])) for r in _read_rows(directory / name)]

    return BiLayerNetwork.from_edges(authors, topics, edges("aa.tsv"), edges("tt.tsv"), edges("at.tsv"), semantic)


def read_edge_csv(path: str | os.PathLike) -> BiLayerNetwork:
    """Load a pre-built network from a CSV edge list.

    Columns: ``layer`` (``aa``, ``tt`` or ``at``), ``source``, ``target`` and
    optional ``weight`` (default 1). For ``at`` rows the source is the
    author and the target the topic. Repeated edges are summed.
    """
    authors: dict[str, int] = {}
    topics: dict[str, int] = {}
    topic_labels: list[str] = []
    layers: dict[str, dict[tuple[int, int], float]] = {"aa": {}, "tt": {}, "at": {}}

    def topic(label):
        k = topic_key(label)
        if k not in topics:
            topics[k] = len(topic_labels)
            topic_labels.append(" ".join(label.split()))
        return topics[k]

    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(row for row in fh if not row.startswith("#"))
        if not reader.fieldnames or not {"layer", "source", "target"} <= set(reader.fieldnames):
            raise DataError(f"{path}: CSV header must include layer,source,target[,weight]")
        for lineno, row in enumerate(reader, 2):
            layer = (row["layer"] or "").strip().lower()
            src, dst = (row["source"] or "").strip(), (row["target"] or "").strip()
            if layer not in layers or not src or not dst:
                raise DataError(f"{path}:{lineno}: bad edge row")
            w = float(row.get("weight") or 1)
            if layer == "aa":
                u, v = authors.setdefault(src, len(authors)), authors.setdefault(dst, len(authors))
            elif layer == "tt":
                u, v = topic(src), topic(dst)
            else:
                u, v = authors.setdefault(src, len(authors)), topic(dst)
            if layer != "at":
                if u == v:
                    raise DataError(f"{path}:{lineno}: self-loop")
                u, v = min(u, v), max(u, v)
            layers[layer][(u, v)] = layers[layer].get((u, v), 0.0) + w
    return BiLayerNetwork.from_edges(list(authors), topic_labels, layers["aa"], layers["tt"], layers["at"])
