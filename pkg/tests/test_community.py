import json
import math
from collections import Counter

import numpy as np
import pytest

from knowtraj import community
from knowtraj.diffusion import RecommendationList
from knowtraj.errors import DataError


def rl(author, topics):
    return RecommendationList(author, tuple((t, 1.0 / (k + 1)) for k, t in enumerate(topics)), tuple(range(len(topics))))


@pytest.mark.parametrize(
    "counts, entropy, hhi",
    [
        ({"X": 2, "Y": 2}, math.log(2), 0.5),
        ({"X": 4}, 0.0, 1.0),
        ({"X": 3, "Y": 1}, -(0.75 * math.log(0.75) + 0.25 * math.log(0.25)), 0.625),
    ],
)
def test_diversity_examples(counts, entropy, hhi):
    e, h = community.diversity(counts)
    assert e == pytest.approx(entropy, abs=1e-12)
    assert h == pytest.approx(hhi, abs=1e-12)


def test_diversity_rounded_values():
    assert round(community.diversity({"X": 2, "Y": 2})[0], 5) == 0.69315
    assert round(community.diversity({"X": 3, "Y": 1})[0], 5) == 0.56234


def test_diversity_empty_raises():
    with pytest.raises(DataError):
        community.diversity({})


def test_two_members_same_topic():
    authors = community.CommunityAssignment("author", {"a": 0, "b": 0})
    (digest,) = community.aggregate_by_community([rl("a", ["X", "Y"]), rl("b", ["X"])], authors)
    assert digest.topic_counts == {"X": 2, "Y": 1}
    assert digest.size == 2
    assert digest.top(1) == [("X", 2)]


def test_top_n_cut_applies():
    authors = community.CommunityAssignment("author", {"a": 0})
    (digest,) = community.aggregate_by_community([rl("a", ["X", "Y", "Z"])], authors, top_n=2)
    assert digest.topic_counts == {"X": 1, "Y": 1}


def test_empty_community_has_no_diversity():
    authors = community.CommunityAssignment("author", {"a": 0, "z": 1})
    digests = community.aggregate_by_community([rl("a", ["X"])], authors)
    assert digests[1].topic_counts == {} and digests[1].entropy is None and digests[1].hhi is None


def _fixture(seed=0, n_authors=40, n_topics=25):
    rng = np.random.default_rng(seed)
    topics = [f"topic {j}" for j in range(n_topics)]
    amap = {f"a{i}": int(rng.integers(3)) for i in range(n_authors)}
    tmap = {t: int(rng.integers(4)) for t in topics[:-3]}  # a few topics stay unlabeled
    recs = [rl(a, list(rng.choice(topics, size=int(rng.integers(0, 15)), replace=False))) for a in amap]
    recs.append(rl("stranger", ["topic 1"]))
    return recs, amap, tmap


def test_counts_equal_membership_scan():
    recs, amap, _ = _fixture()
    authors = community.CommunityAssignment("author", amap)
    digests = community.aggregate_by_community(recs, authors, top_n=10)
    for d in digests:
        members = {a for a, c in amap.items() if c == d.community}
        expected = Counter()
        for rec in recs:
            if rec.target in members:
                for t in {t for t, _ in rec.entries[:10]}:
                    expected[t] += 1
        assert d.topic_counts == dict(expected)
        assert d.size == len(members)
        counts = list(d.topic_counts.values())
        assert counts == sorted(counts, reverse=True)


def test_cross_distribution_matches_double_loop():
    recs, amap, tmap = _fixture(1)
    authors = community.CommunityAssignment("author", amap)
    topics = community.CommunityAssignment("topic", tmap)
    cross = community.cross_distribution(recs, authors, topics, top_n=8)
    expected = np.zeros((3, 4), dtype=int)
    dropped = 0
    for rec in recs:
        for t, _ in rec.entries[:8]:
            if rec.target in amap and t in tmap:
                expected[amap[rec.target], tmap[t]] += 1
            else:
                dropped += 1
    assert cross.author_communities == [0, 1, 2] and cross.topic_communities == [0, 1, 2, 3]
    assert np.array_equal(cross.counts, expected)
    assert cross.dropped == dropped


def test_cross_row_sum_identity():
    recs, amap, _ = _fixture(2)
    tmap = {f"topic {j}": j % 2 for j in range(25)}
    cross = community.cross_distribution(recs, community.CommunityAssignment("author", amap),
                                         community.CommunityAssignment("topic", tmap), top_n=5)
    for cid in cross.author_communities:
        expected = sum(min(5, len(r)) for r in recs if amap.get(r.target) == cid)
        assert cross.row(cid).sum() == expected


def test_cross_single_incidence():
    cross = community.cross_distribution(
        [rl("a", ["X"])],
        community.CommunityAssignment("author", {"a": 0, "b": 1}),
        community.CommunityAssignment("topic", {"X": 1, "Y": 0}),
    )
    assert cross.counts.tolist() == [[0, 1], [0, 0]]


def test_assignment_validation(toy1):
    with pytest.raises(DataError):
        community.CommunityAssignment("venue", {})
    with pytest.raises(DataError):
        community.CommunityAssignment("author", {"a": -1})
    with pytest.raises(DataError):
        community.CommunityAssignment("author", {"a": 1.5})
    community.CommunityAssignment("topic", {"t1": 0, "T3": 1}).validate(toy1)
    with pytest.raises(DataError):
        community.CommunityAssignment("author", {"Q": 0}).validate(toy1)


def test_from_tsv_and_writers(tmp_path):
    (tmp_path / "a.tsv").write_text("# author\tcommunity\na\t0\nb\t0\n", encoding="utf-8")
    (tmp_path / "bad.tsv").write_text("a\tzero\n", encoding="utf-8")
    authors = community.CommunityAssignment.from_tsv(tmp_path / "a.tsv", "author")
    assert authors.sizes() == {0: 2}
    with pytest.raises(DataError):
        community.CommunityAssignment.from_tsv(tmp_path / "bad.tsv", "author")
    digests = community.aggregate_by_community([rl("a", ["X"]), rl("b", ["X", "Y"])], authors)
    community.write_digests(digests, tmp_path / "d.json", {"seed": 4})
    data = json.loads((tmp_path / "d.json").read_text())
    assert data["meta"] == {"seed": 4}
    assert data["communities"][0]["topics"] == [{"topic": "X", "authors": 2}, {"topic": "Y", "authors": 1}]
    topics = community.CommunityAssignment("topic", {"x": 0, "y": 1})
    cross = community.cross_distribution([rl("a", ["X"]), rl("b", ["X", "Y"])], authors, topics)
    community.write_cross_csv(cross, tmp_path / "c.csv", {"seed": 4})
    assert (tmp_path / "c.csv").read_text().splitlines() == [
        "# seed=4",
        "author_community,topic_community_0,topic_community_1,total",
        "0,2,1,3",
    ]
