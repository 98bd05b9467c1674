"""Independent reference implementations used as test oracles.

Everything here works on dense numpy arrays or plain Python sets so it
shares no code path with the sparse library implementation.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np


def dense(net):
    return net.aa.toarray(), net.tt.toarray(), net.at.toarray()


def row_normalize(m: np.ndarray) -> np.ndarray:
    s = m.sum(axis=1, keepdims=True)
    return np.divide(m, s, out=np.zeros_like(m, dtype=float), where=s > 0)


def diffusion_matrix(theta: np.ndarray, phi: np.ndarray, mu: np.ndarray, r_init: float = 1.0) -> np.ndarray:
    """Raw scores for every (author, topic): r * (P_mu P_phi + P_theta P_mu)."""
    p_mu, p_phi, p_theta = row_normalize(mu), row_normalize(phi), row_normalize(theta)
    return r_init * (p_mu @ p_phi + p_theta @ p_mu)


def exact_diffusion(theta, phi, mu, author: int) -> list[Fraction]:
    """Raw scores for one author in rational arithmetic (integer weights only)."""
    A, T = mu.shape
    to_int = lambda m: [[int(x) for x in row] for row in m]  # noqa: E731
    theta, phi, mu = to_int(theta), to_int(phi), to_int(mu)
    score = [Fraction(0)] * T
    s_mu = sum(mu[author])
    for t in range(T):
        if mu[author][t]:
            share = Fraction(mu[author][t], s_mu)
            s_phi = sum(phi[t])
            for u in range(T):
                if phi[t][u]:
                    score[u] += share * Fraction(phi[t][u], s_phi)
    s_theta = sum(theta[author])
    for c in range(A):
        if theta[author][c]:
            share = Fraction(theta[author][c], s_theta)
            s_c = sum(mu[c])
            for u in range(T):
                if mu[c][u]:
                    score[u] += share * Fraction(mu[c][u], s_c)
    return score


def masked_ranking(scores: np.ndarray, linked: np.ndarray) -> list[tuple[int, object]]:
    """Unlinked positive-score topics sorted by score desc, index asc (plain sort; pass exact values to avoid float ties)."""
    items = [(j, s) for j, s in enumerate(scores) if not linked[j] and s > 0]
    return sorted(items, key=lambda x: (-x[1], x[0]))


def cooccurrence(records):
    """Brute-force pair counts keyed by identities / casefolded topic keys."""
    aa, tt, at = Counter(), Counter(), Counter()
    for r in records:
        authors = sorted({a.identity for a in r.authors})
        topics = sorted({t.key for t in r.topics})
        for x, y in itertools.combinations(authors, 2):
            aa[(x, y)] += 1
        for x, y in itertools.combinations(topics, 2):
            tt[(x, y)] += 1
        for x in authors:
            for y in topics:
                at[(x, y)] += 1
    return aa, tt, at


def union_adjacency(net) -> np.ndarray:
    theta, phi, mu = dense(net)
    a = theta.shape[0]
    w = np.zeros((a + phi.shape[0],) * 2)
    w[:a, :a] = theta
    w[a:, a:] = phi
    w[:a, a:] = mu
    w[a:, :a] = mu.T
    return w


def baseline_dense(net, method: str) -> np.ndarray:
    """Every baseline score for all (author, topic) pairs, by explicit loops over the union graph."""
    theta, phi, mu = dense(net)
    w = union_adjacency(net)
    a, t = mu.shape
    nbrs = [set(np.flatnonzero(w[i])) for i in range(w.shape[0])]
    deg = [len(n) for n in nbrs]
    strength = w.sum(axis=1)
    out = np.zeros((a, t))
    for i in range(a):
        for j in range(t):
            y = a + j
            common = nbrs[i] & nbrs[y]
            if method == "jc":
                u = nbrs[i] | nbrs[y]
                out[i, j] = len(common) / len(u) if u else 0.0
            elif method == "aa":
                out[i, j] = sum(1 / math.log(deg[z]) for z in common if deg[z] > 1)
            elif method == "pa":
                out[i, j] = deg[i] * deg[y]
            elif method == "ra":
                out[i, j] = sum(1 / deg[z] for z in common)
            elif method == "wra":
                out[i, j] = sum(w[i, z] * w[z, y] / strength[z] for z in common)
            elif method == "content":
                out[i, j] = sum(phi[s, j] for s in range(t) if mu[i, s] > 0)
            elif method == "cf":
                out[i, j] = sum(theta[i, c] * mu[c, j] for c in range(a))
            else:
                raise ValueError(method)
    return out


def pairwise_auc(pos, neg) -> float:
    wins = 0.0
    for p in pos:
        for n in neg:
            wins += 1.0 if p > n else 0.5 if p == n else 0.0
    return wins / (len(pos) * len(neg))
