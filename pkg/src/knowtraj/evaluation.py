"""Time-split validation: candidate enumeration, labelling, ROC/AUC and probe-set AUC."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np
from scipy.stats import rankdata

from knowtraj._io import atomic_write, header_line
from knowtraj.baselines import CandidatePair
from knowtraj.errors import DataError
from knowtraj.network import BiLayerNetwork
from knowtraj.records import topic_key


def _overlap(train_labels: Sequence[str], test_index: Mapping[str, int], key=lambda s: s) -> tuple[np.ndarray, np.ndarray]:
    tr, te = [], []
    for i, label in enumerate(train_labels):
        j = test_index.get(key(label))
        if j is not None:
            tr.append(i)
            te.append(j)
    return np.array(tr, dtype=np.int64), np.array(te, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class CandidateSet:
    """Unlinked (author, topic) pairs, stored column-wise in both index spaces.

    ``authors``/``topics`` index the training network, ``test_authors``/
    ``test_topics`` the testing network. Order is lexicographic by training
    (author, topic) index and doubles as the deterministic tie-break order.
    """

    authors: np.ndarray
    topics: np.ndarray
    test_authors: np.ndarray
    test_topics: np.ndarray
    overlap_authors: int
    overlap_topics: int
    existing_edges: int

    @property
    def possible(self) -> int:
        return self.overlap_authors * self.overlap_topics

    def __len__(self) -> int:
        return int(self.authors.shape[0])

    def __iter__(self) -> Iterator[CandidatePair]:
        for a, t in zip(self.authors.tolist(), self.topics.tolist()):
            yield CandidatePair(a, t)


def enumerate_candidates(train_net: BiLayerNetwork, test_net: BiLayerNetwork) -> CandidateSet:
    """All train-unlinked pairs whose author and topic occur in both networks."""
    a_tr, a_te = _overlap(train_net.author_labels, test_net.author_index)
    t_tr, t_te = _overlap(train_net.topic_labels, test_net.topic_index, topic_key)
    if a_tr.size == 0 or t_tr.size == 0:
        raise DataError(
            f"no overlap between training and testing networks ({a_tr.size} authors, {t_tr.size} topics)"
        )
    sub = train_net.at[a_tr][:, t_tr].tocsr()
    sub.sort_indices()
    linked = np.zeros((a_tr.size, t_tr.size), dtype=bool)
    linked[np.repeat(np.arange(a_tr.size), np.diff(sub.indptr)), sub.indices] = True
    ii, jj = np.nonzero(~linked)
    return CandidateSet(a_tr[ii], t_tr[jj], a_te[ii], t_te[jj], int(a_tr.size), int(t_tr.size), int(sub.nnz))


class LabeledCandidate(NamedTuple):
    pair: CandidatePair
    score: float
    label: bool


@dataclass(frozen=True, eq=False)
class LabeledCandidates:
    candidates: CandidateSet
    scores: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return int(self.scores.shape[0])

    def __iter__(self) -> Iterator[LabeledCandidate]:
        for pair, s, y in zip(self.candidates, self.scores.tolist(), self.labels.tolist()):
            yield LabeledCandidate(pair, s, y)

    @property
    def n_pos(self) -> int:
        return int(self.labels.sum())


def label_candidates(candidates: CandidateSet, test_net: BiLayerNetwork, scores: np.ndarray) -> LabeledCandidates:
    """A candidate is positive iff its author–topic edge exists in the testing network."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (len(candidates),):
        raise DataError(f"{scores.shape[0] if scores.ndim else 0} scores for {len(candidates)} candidates")
    at = test_net.at
    labels = np.zeros(len(candidates), dtype=bool)
    if at.nnz:
        # CSR rows are sorted, so row-major flat keys are globally sorted
        n_t = test_net.topic_count
        keys = candidates.test_authors * n_t + candidates.test_topics
        edge_keys = np.repeat(np.arange(test_net.author_count, dtype=np.int64), np.diff(at.indptr)) * n_t + at.indices
        pos = np.minimum(np.searchsorted(edge_keys, keys), edge_keys.size - 1)
        labels = (edge_keys[pos] == keys) & (at.data[pos] > 0)
    return LabeledCandidates(candidates, scores, labels)


@dataclass(frozen=True, eq=False)
class RocReport:
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float
    n_pos: int
    n_neg: int
    u_statistic: float
    k: int | None = None
    method: str = ""

    @property
    def curve(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def trapezoid_area(self) -> float:
        return float(np.sum(np.diff(self.fpr) * (self.tpr[1:] + self.tpr[:-1]) / 2.0))

    def thinned(self, max_points: int) -> "RocReport":
        """Copy with at most ``max_points`` curve points (endpoints kept); AUC unchanged."""
        n = self.fpr.shape[0]
        if max_points <= 0 or n <= max_points:
            return self
        keep = np.unique(np.linspace(0, n - 1, max(max_points, 2)).round().astype(np.int64))
        return RocReport(
            self.fpr[keep], self.tpr[keep], self.auc, self.n_pos, self.n_neg, self.u_statistic, self.k, self.method
        )


def roc_from_scores(scores: np.ndarray, labels: np.ndarray, k: int | None = None, method: str = "") -> RocReport:
    """ROC curve and AUC; tied scores share one threshold and earn half credit.

    With ``k`` the population is first cut to the ``k`` best-scored items
    (ties at the cut resolved by input order).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape:
        raise DataError("scores and labels differ in length")
    if k is not None:
        if k <= 0:
            raise DataError(f"k must be positive, got {k}")
        top = np.argsort(-scores, kind="stable")[:k]
        top.sort()
        scores, labels = scores[top], labels[top]
    n_pos = int(labels.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        missing = "positive" if n_pos == 0 else "negative"
        where = f"top-{k}" if k is not None else "labeled set"
        raise DataError(f"no {missing} candidates in the {where}; AUC undefined")

    ranks = rankdata(scores, method="average")
    # exact: half-integer ranks summed in index order
    u = float(np.sum(ranks[labels])) - n_pos * (n_pos + 1) / 2.0
    auc = u / (n_pos * n_neg)

    order = np.argsort(-scores, kind="stable")
    s_sorted, y_sorted = scores[order], labels[order]
    last_of_group = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), s_sorted.size - 1]
    tp = np.cumsum(y_sorted)[last_of_group]
    fp = (last_of_group + 1) - tp
    fpr = np.r_[0.0, fp / n_neg]
    tpr = np.r_[0.0, tp / n_pos]
    return RocReport(fpr, tpr, auc, n_pos, n_neg, u, k, method)


def roc_auc(labeled: LabeledCandidates, k: int | None = None, method: str = "") -> RocReport:
    return roc_from_scores(labeled.scores, labeled.labels, k, method)


def pairwise_auc(pos_scores: Sequence[float], neg_scores: Sequence[float]) -> float:
    """Brute-force AUC over every positive–negative pairing (ties count 0.5)."""
    pos = np.asarray(pos_scores, dtype=np.float64)[:, None]
    neg = np.asarray(neg_scores, dtype=np.float64)[None, :]
    wins = np.count_nonzero(pos > neg)
    ties = np.count_nonzero(pos == neg)
    return (wins + 0.5 * ties) / (pos.size * neg.size)


@dataclass(frozen=True, eq=False)
class ProbeSet:
    """Balanced sample of test-network links (positives) and absent pairs (negatives).

    Pairs are rows of ``(author, topic)`` in training-network indices.
    """

    positives: np.ndarray
    negatives: np.ndarray
    rng_seed: int

    @property
    def size(self) -> int:
        return int(self.positives.shape[0] + self.negatives.shape[0])

    def check(self) -> None:
        if self.positives.shape != self.negatives.shape or self.positives.ndim != 2:
            raise DataError("probe set must hold equally many positive and negative pairs")
        pos = {tuple(p) for p in self.positives.tolist()}
        neg = {tuple(p) for p in self.negatives.tolist()}
        if len(pos) != len(self.positives) or len(neg) != len(self.negatives):
            raise DataError("probe set contains repeated pairs")
        if pos & neg:
            raise DataError("probe positives and negatives overlap")

    def validate(self, train_net: BiLayerNetwork, test_net: BiLayerNetwork) -> None:
        """Check labels against the testing network."""
        self.check()
        for arr, expect in ((self.positives, True), (self.negatives, False)):
            for a, t in arr.tolist():
                present = test_net.mu(train_net.author_labels[a], train_net.topic_labels[t]) > 0
                if present != expect:
                    kind = "positive" if expect else "negative"
                    raise DataError(f"probe {kind} ({a}, {t}) mislabelled against the testing network")


def make_probe_set(train_net: BiLayerNetwork, test_net: BiLayerNetwork, size: int = 20000, seed: int = 0) -> ProbeSet:
    """Draw ``size/2`` test links and ``size/2`` absent pairs, uniformly and without replacement.

    Both halves are restricted to authors and topics present in the training
    network so every pair can be scored; whether a pair is already a
    training link is not constrained.
    """
    if size <= 0 or size % 2:
        raise DataError(f"probe size must be a positive even integer, got {size}")
    half = size // 2
    rng = np.random.default_rng(seed)
    a_tr, a_te = _overlap(train_net.author_labels, test_net.author_index)
    t_tr, t_te = _overlap(train_net.topic_labels, test_net.topic_index, topic_key)
    if a_tr.size == 0 or t_tr.size == 0:
        raise DataError("no overlap between training and testing networks")

    te_to_tr_a = np.full(test_net.author_count, -1, dtype=np.int64)
    te_to_tr_a[a_te] = a_tr
    te_to_tr_t = np.full(test_net.topic_count, -1, dtype=np.int64)
    te_to_tr_t[t_te] = t_tr
    coo = test_net.at.tocoo()
    order = np.lexsort((coo.col, coo.row))
    rows, cols = te_to_tr_a[coo.row[order]], te_to_tr_t[coo.col[order]]
    ok = (rows >= 0) & (cols >= 0)
    eligible = np.column_stack([rows[ok], cols[ok]])
    if eligible.shape[0] < half:
        raise DataError(f"only {eligible.shape[0]} scorable testing links; cannot draw {half} positives")
    positives = eligible[np.sort(rng.choice(eligible.shape[0], size=half, replace=False))]

    test_keys = set(zip(eligible[:, 0].tolist(), eligible[:, 1].tolist()))
    available = a_tr.size * t_tr.size - len(test_keys)
    if available < half:
        raise DataError(f"only {available} absent pairs; cannot draw {half} negatives")
    chosen: dict[tuple[int, int], None] = {}
    while len(chosen) < half:
        need = half - len(chosen)
        ai = a_tr[rng.integers(0, a_tr.size, size=2 * need + 16)]
        ti = t_tr[rng.integers(0, t_tr.size, size=2 * need + 16)]
        for pair in zip(ai.tolist(), ti.tolist()):
            if pair not in test_keys and pair not in chosen:
                chosen[pair] = None
                if len(chosen) == half:
                    break
    negatives = np.array(list(chosen), dtype=np.int64).reshape(-1, 2)
    probe = ProbeSet(positives.astype(np.int64), negatives, seed)
    probe.check()
    return probe


def probe_auc(score_fn: Callable[[np.ndarray, np.ndarray], np.ndarray], probe: ProbeSet, method: str = "") -> RocReport:
    """AUC over every positive–negative pairing of the probe set, ties at 0.5."""
    probe.check()
    pairs = np.vstack([probe.positives, probe.negatives])
    scores = np.asarray(score_fn(pairs[:, 0], pairs[:, 1]), dtype=np.float64)
    labels = np.r_[np.ones(len(probe.positives), dtype=bool), np.zeros(len(probe.negatives), dtype=bool)]
    return roc_from_scores(scores, labels, None, method)


def _fmt(x: float) -> str:
    return repr(float(x))


def export_report(
    reports: Sequence[RocReport], path: str | os.PathLike, meta: Mapping[str, object] | None = None
) -> None:
    """CSV with ``method,k,fpr,tpr,auc``: each report's curve points followed by its summary row."""
    if not reports:
        raise DataError("no reports to export")
    with atomic_write(path, newline="") as fh:
        fh.write(header_line(meta))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "k", "fpr", "tpr", "auc"])
        for r in reports:
            k = "all" if r.k is None else r.k
            for x, y in zip(r.fpr.tolist(), r.tpr.tolist()):
                w.writerow([r.method, k, _fmt(x), _fmt(y), ""])
            w.writerow([r.method, k, "", "", _fmt(r.auc)])
