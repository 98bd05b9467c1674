"""Built-in fixtures and invariant checks behind ``knowtraj selfcheck``."""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from knowtraj import diffusion
from knowtraj.evaluation import pairwise_auc, roc_from_scores
from knowtraj.network import BiLayerNetwork
from knowtraj.synthetic import random_network

TOY_EXPECTED = {
    1: [("T2", 0.75), ("T3", 0.75)],
    2: [("T2", 1.0), ("T3", 0.5)],
}


def toy_network(variant: int = 1) -> BiLayerNetwork:
    """Two authors, three topics. Variant 2 lowers phi(T1, T3) from 3 to 1."""
    return BiLayerNetwork.from_edges(
        ["A", "B"],
        ["T1", "T2", "T3"],
        aa={(0, 1): 1},
        tt={(0, 1): 1, (0, 2): 3 if variant == 1 else 1},
        at={(0, 0): 2, (1, 0): 1, (1, 1): 1},
    )


class CheckResult(NamedTuple):
    name: str
    ok: bool
    detail: str = ""


def conservation_violations(net: BiLayerNetwork, target: int, r_init: float = 1.0, tol: float = 1e-9) -> list[str]:
    """Mass-balance identities of the four diffusion hops for one target."""
    st = diffusion.diffuse(net, target, r_init)
    out: list[str] = []
    for name, arr in (
        ("step1", st.topic_direct),
        ("step2", st.coauthor),
        ("step3", st.topic_via_topics),
        ("step4", st.topic_via_authors),
    ):
        if (arr < 0).any():
            out.append(f"{name}: negative resource")

    has_topics = net.at.indptr[target + 1] > net.at.indptr[target]
    has_coauthors = net.aa.indptr[target + 1] > net.aa.indptr[target]
    expect1 = r_init if has_topics else 0.0
    expect2 = r_init if has_coauthors else 0.0
    if abs(st.topic_direct.sum() - expect1) > tol:
        out.append(f"step1: sum {float(st.topic_direct.sum())!r} != {expect1}")
    if abs(st.coauthor.sum() - expect2) > tol:
        out.append(f"step2: sum {float(st.coauthor.sum())!r} != {expect2}")

    tt_deg = np.diff(net.tt.indptr)
    expect3 = st.topic_direct[tt_deg > 0].sum()
    if abs(st.topic_via_topics.sum() - expect3) > tol:
        out.append(f"step3: sum {float(st.topic_via_topics.sum())!r} != {float(expect3)!r}")
    at_deg = np.diff(net.at.indptr)
    expect4 = st.coauthor[at_deg > 0].sum()
    if abs(st.topic_via_authors.sum() - expect4) > tol:
        out.append(f"step4: sum {float(st.topic_via_authors.sum())!r} != {float(expect4)!r}")

    rec = diffusion.finalize(net, target, st.topic_via_topics, st.topic_via_authors)
    if sum(rec.scores) > 2 * r_init + tol:
        out.append(f"bound: scores sum {float(sum(rec.scores))!r} > 2 * r_init")
    return out


def _toy_check(variant: int, net: BiLayerNetwork | None) -> CheckResult:
    net = net or toy_network(variant)
    got = diffusion.recommend(net, "A").entries
    want = TOY_EXPECTED[variant]
    ok = len(got) == len(want) and all(g[0] == w[0] and abs(g[1] - w[1]) <= 1e-12 for g, w in zip(got, want))
    return CheckResult(f"toy{variant}-trace", ok, "" if ok else f"got {list(got)}, want {want}")


def run_selfcheck(
    networks: int = 50, seed: int = 2024, toy_override: dict[int, BiLayerNetwork] | None = None
) -> list[CheckResult]:
    toy_override = toy_override or {}
    results = [_toy_check(1, toy_override.get(1)), _toy_check(2, toy_override.get(2))]

    for variant in (1, 2):
        net = toy_override.get(variant) or toy_network(variant)
        problems = net.validate()
        for a in range(net.author_count):
            problems += [f"author {a}: {p}" for p in conservation_violations(net, a)]
        results.append(CheckResult(f"toy{variant}-conservation", not problems, "; ".join(problems)))

    rng = np.random.default_rng(seed)
    problems: list[str] = []
    for k in range(networks):
        net = random_network(rng, int(rng.integers(2, 30)), int(rng.integers(2, 30)), float(rng.uniform(0.02, 0.4)))
        r_init = float(rng.choice([1.0, 0.3, 7.5]))
        for a in range(net.author_count):
            problems += [f"net {k} author {a}: {p}" for p in conservation_violations(net, a, r_init)]
    results.append(CheckResult("random-conservation", not problems, "; ".join(problems[:3])))

    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 200))
        scores = rng.integers(0, 10, size=n).astype(float)
        labels = rng.random(n) < 0.5
        if labels.all() or not labels.any():
            continue
        worst = max(worst, abs(roc_from_scores(scores, labels).auc - pairwise_auc(scores[labels], scores[~labels])))
    results.append(CheckResult("auc-rank-vs-pairwise", worst <= 1e-12, f"max diff {worst:.3g}"))
    return results


def format_results(results: list[CheckResult], emit: Callable[[str], None] = print) -> bool:
    for r in results:
        emit(f"{'PASS' if r.ok else 'FAIL'} {r.name}" + (f": {r.detail}" if r.detail and not r.ok else ""))
    return all(r.ok for r in results)
