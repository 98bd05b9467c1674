"""Comparison scorers for author→topic links.

The common-neighbour indices (JC, AA, PA, RA, weighted RA) treat the three
edge sets as one undirected graph over authors and topics, so both
co-authors and co-occurring topics can be shared neighbours. Content and CF
score through the topic layer and the co-authorship layer respectively.

Each scorer exists twice: a per-pair function written against neighbour
sets, and a batched path (``score_pairs``) built on sparse products for
scoring millions of candidates.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy import sparse

from knowtraj import diffusion
from knowtraj.errors import DataError
from knowtraj.network import BiLayerNetwork

METHODS = ("diffusion", "jc", "aa", "pa", "ra", "wra", "content", "cf", "semantic")
PAIR_CHUNK = 256


class CandidatePair(NamedTuple):
    author: int
    topic: int


class NeighborView(NamedTuple):
    node: int
    neighbors: dict[int, float]

    @property
    def degree(self) -> int:
        return len(self.neighbors)

    @property
    def strength(self) -> float:
        return sum(self.neighbors.values())


class UnionGraph(NamedTuple):
    """Authors occupy ids ``[0, A)``, topics ``[A, A + T)``."""

    weighted: sparse.csr_matrix
    binary: sparse.csr_matrix
    degree: np.ndarray
    strength: np.ndarray
    n_authors: int


@lru_cache(maxsize=8)
def union_graph(net: BiLayerNetwork) -> UnionGraph:
    w = sparse.bmat([[net.aa, net.at], [net.at.T, net.tt]], format="csr")
    w.sort_indices()
    b = w.copy()
    b.data = np.ones_like(b.data)
    degree = np.diff(w.indptr).astype(np.float64)
    strength = np.asarray(w.sum(axis=1)).ravel()
    return UnionGraph(w, b, degree, strength, net.author_count)


def neighbor_view(net: BiLayerNetwork, node: int) -> NeighborView:
    """Union-graph neighbourhood of a node given in union ids."""
    a_count = net.author_count
    out: dict[int, float] = {}
    if node < a_count:
        for idx, w in zip(*net.coauthors(node)):
            out[int(idx)] = float(w)
        for idx, w in zip(*net.topics_of(node)):
            out[a_count + int(idx)] = float(w)
    else:
        t = node - a_count
        for idx, w in zip(*net.authors_of(t)):
            out[int(idx)] = float(w)
        for idx, w in zip(*net.topic_neighbors(t)):
            out[a_count + int(idx)] = float(w)
    return NeighborView(node, out)


def _views(net: BiLayerNetwork, pair) -> tuple[NeighborView, NeighborView]:
    author, topic = pair
    a = net.author_id(author)
    t = net.topic_id(topic)
    return neighbor_view(net, a), neighbor_view(net, net.author_count + t)


def score_jc(net: BiLayerNetwork, pair) -> float:
    x, y = _views(net, pair)
    union = x.neighbors.keys() | y.neighbors.keys()
    if not union:
        return 0.0
    return len(x.neighbors.keys() & y.neighbors.keys()) / len(union)


def score_aa(net: BiLayerNetwork, pair) -> float:
    x, y = _views(net, pair)
    total = 0.0
    for z in sorted(x.neighbors.keys() & y.neighbors.keys()):
        d = neighbor_view(net, z).degree
        if d > 1:
            total += 1.0 / math.log(d)
    return total


def score_pa(net: BiLayerNetwork, pair) -> float:
    x, y = _views(net, pair)
    return float(x.degree * y.degree)


def score_ra(net: BiLayerNetwork, pair) -> float:
    x, y = _views(net, pair)
    return sum(1.0 / neighbor_view(net, z).degree for z in sorted(x.neighbors.keys() & y.neighbors.keys()))


def score_weighted_ra(net: BiLayerNetwork, pair) -> float:
    """Sum over common neighbours z of w(author, z) * w(z, topic) / strength(z)."""
    x, y = _views(net, pair)
    total = 0.0
    for z in sorted(x.neighbors.keys() & y.neighbors.keys()):
        total += x.neighbors[z] * y.neighbors[z] / neighbor_view(net, z).strength
    return total


def score_content(net: BiLayerNetwork, pair) -> float:
    """Co-occurrence mass between the author's current topics and the candidate topic."""
    author, topic = pair
    t = net.topic_id(topic)
    own, _ = net.topics_of(author)
    return float(sum(net.phi(int(s), t) for s in own))


def score_cf(net: BiLayerNetwork, pair) -> float:
    """Topic usage among co-authors, weighted by collaboration strength."""
    author, topic = pair
    t = net.topic_id(topic)
    total = 0.0
    for c, theta in zip(*net.coauthors(author)):
        total += float(theta) * net.mu(int(c), t)
    return total


def score_semantic_diffusion(net_semantic: BiLayerNetwork, target, top_n: int = diffusion.DEFAULT_TOP_N):
    """Diffusion ranking on a network whose topic layer holds semantic similarities."""
    if not net_semantic.semantic:
        raise DataError("score_semantic_diffusion expects a network from build_semantic_layer")
    return diffusion.recommend(net_semantic, target, top_n)


PAIR_SCORERS: dict[str, Callable] = {
    "jc": score_jc,
    "aa": score_aa,
    "pa": score_pa,
    "ra": score_ra,
    "wra": score_weighted_ra,
    "content": score_content,
    "cf": score_cf,
}


def _cn_right(net: BiLayerNetwork, method: str) -> sparse.csr_matrix:
    """Right operand for common-neighbour sums: diag(weight(z)) @ U[:, topics]."""
    g = union_graph(net)
    a = g.n_authors
    if method == "ra":
        scale, base = np.divide(1.0, g.degree, out=np.zeros_like(g.degree), where=g.degree > 0), g.binary
    elif method == "aa":
        logs = np.log(np.maximum(g.degree, 1.0))
        scale, base = np.divide(1.0, logs, out=np.zeros_like(logs), where=g.degree > 1), g.binary
    elif method == "wra":
        scale, base = np.divide(1.0, g.strength, out=np.zeros_like(g.strength), where=g.strength > 0), g.weighted
    else:
        return g.binary[:, a:].tocsr()
    return (sparse.diags(scale) @ base[:, a:]).tocsr()


class _BatchScorer:
    """Dense score rows (authors x all topics) for one method."""

    def __init__(self, net: BiLayerNetwork, method: str):
        if method not in METHODS:
            raise DataError(f"unknown method {method!r}; expected one of {METHODS}")
        self.net, self.method = net, method
        if method in ("diffusion", "semantic"):
            if method == "semantic" and not net.semantic:
                raise DataError("method 'semantic' needs a network from build_semantic_layer")
            return
        g = union_graph(net)
        self.g = g
        if method in ("ra", "aa", "wra", "jc"):
            self.left = g.weighted if method == "wra" else g.binary
            self.right = _cn_right(net, method)
        elif method == "content":
            at_bin = net.at.copy()
            at_bin.data = np.ones_like(at_bin.data)
            self.left, self.right = at_bin, net.tt
        elif method == "cf":
            self.left, self.right = net.aa, net.at

    def rows(self, authors: np.ndarray) -> np.ndarray:
        net, m = self.net, self.method
        if m in ("diffusion", "semantic"):
            out = np.zeros((len(authors), net.topic_count))
            for k, a in enumerate(authors.tolist()):
                out[k] = diffusion.raw_scores(net, a)
            return out
        g = getattr(self, "g", None)
        if m == "pa":
            return np.outer(g.degree[authors], g.degree[g.n_authors :])
        prod = (self.left[authors] @ self.right).toarray()
        if m == "jc":
            union = g.degree[authors][:, None] + g.degree[g.n_authors :][None, :] - prod
            return np.divide(prod, union, out=np.zeros_like(prod), where=union > 0)
        return prod


def score_pairs(
    net: BiLayerNetwork,
    method: str,
    authors: np.ndarray,
    topics: np.ndarray,
    workers: int = 1,
    chunk: int = PAIR_CHUNK,
) -> np.ndarray:
    """Scores for many (author, topic) index pairs, aligned with the input order.

    Work is cut into fixed chunks of distinct authors, so the output does
    not depend on ``workers``. Diffusion scores are the raw f_t + f_a (equal
    to the ranked score for every unlinked pair).
    """
    authors = np.asarray(authors, dtype=np.int64)
    topics = np.asarray(topics, dtype=np.int64)
    if authors.shape != topics.shape:
        raise DataError("author and topic arrays differ in length")
    out = np.zeros(authors.shape[0])
    if authors.size == 0:
        return out
    if authors.min() < 0 or authors.max() >= net.author_count or topics.min() < 0 or topics.max() >= net.topic_count:
        raise DataError("pair index out of range")
    scorer = _BatchScorer(net, method)
    uniq, inverse = np.unique(authors, return_inverse=True)
    order = np.argsort(inverse, kind="stable")
    bounds = np.searchsorted(inverse[order], np.arange(0, uniq.size + chunk, chunk))
    bounds = np.minimum(bounds, order.size)

    def run(k: int) -> tuple[np.ndarray, np.ndarray]:
        lo = k * chunk
        block = scorer.rows(uniq[lo : lo + chunk])
        sel = order[bounds[k] : bounds[k + 1]]
        return sel, block[inverse[sel] - lo, topics[sel]]

    n_chunks = (uniq.size + chunk - 1) // chunk
    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(n_chunks)))
    else:
        parts = [run(k) for k in range(n_chunks)]
    for sel, vals in parts:
        out[sel] = vals
    return out


def make_scorer(net: BiLayerNetwork, method: str, workers: int = 1) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Bind ``score_pairs`` to one network and method."""
    _BatchScorer(net, method)  # fail fast on a bad method/network combination

    def score(authors: np.ndarray, topics: np.ndarray) -> np.ndarray:
        return score_pairs(net, method, authors, topics, workers=workers)

    return score


def recommend_by_method(
    net: BiLayerNetwork, method: str, targets=None, top_n: int = diffusion.DEFAULT_TOP_N, workers: int = 1
) -> list[diffusion.RecommendationList]:
    """Ranking lists of unlinked topics for any scorer (diffusion takes its own path)."""
    if method in ("diffusion", "semantic"):
        if method == "semantic" and not net.semantic:
            raise DataError("method 'semantic' needs a network from build_semantic_layer")
        return diffusion.recommend_all(net, targets, top_n, workers)
    ids = list(range(net.author_count)) if targets is None else diffusion._resolve_all(net, targets)
    scorer = _BatchScorer(net, method)
    out = []
    for lo in range(0, len(ids), PAIR_CHUNK):
        block_ids = np.array(ids[lo : lo + PAIR_CHUNK], dtype=np.int64)
        block = scorer.rows(block_ids) if block_ids.size else np.zeros((0, net.topic_count))
        for a, row in zip(block_ids.tolist(), block):
            out.append(diffusion.rank_unconnected(net, a, row, top_n))
    return out
