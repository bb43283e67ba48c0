import json

import numpy as np
import pytest

from hategraph.graph import ingest_edges, ingest_users, read_labels
from hategraph.synth import REFERENCE_DATE, SynthConfig, generate, write_outputs
from hategraph.text import PhraseMatcher


def small_cfg(**kw):
    base = dict(n=300, minority_fraction=0.1, homophily=0.5,
                tweets_per_user=3, tokens_per_tweet=5, vocab_size=40,
                vector_dim=4, seed=11)
    base.update(kw)
    return SynthConfig(**base)


def test_minority_count_is_exact():
    res = generate(small_cfg())
    assert len(res.minority_ids) == 30
    assert res.truth["minority_count"] == 30
    assert res.truth["prevalence"] == pytest.approx(0.1)


def test_edge_count_and_simple_graph():
    res = generate(small_cfg())
    g = res.graph
    assert g.num_edges == res.truth["edges"]
    for u, v in g.edges():
        assert u != v
    # degrees stay within the configured cap
    assert int(np.max(g.out_degrees())) <= 1000


def test_generation_is_deterministic(tmp_path):
    cfg = small_cfg()
    r1 = generate(cfg)
    r2 = generate(cfg)
    assert r1.minority_ids == r2.minority_ids
    assert r1.truth == r2.truth
    assert r1.profiles["u000000"].tweets == r2.profiles["u000000"].tweets
    d1, d2 = tmp_path / "a", tmp_path / "b"
    write_outputs(r1, d1, {"seed": cfg.seed})
    write_outputs(r2, d2, {"seed": cfg.seed})
    for name in ("edges.tsv", "users.jsonl", "labels.csv", "suspended.csv",
                 "lexicon.txt", "vectors.txt", "truth.json"):
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes(), name


def test_different_seeds_differ():
    r1 = generate(small_cfg(seed=1))
    r2 = generate(small_cfg(seed=2))
    assert r1.minority_ids != r2.minority_ids


def test_homophily_realized_in_mixing():
    cfg = small_cfg(n=4000, minority_fraction=0.05, homophily=0.4,
                    mean_out_degree=4.0, seed=3)
    res = generate(cfg)
    assert res.truth["mixing"]["minority->minority"] == pytest.approx(0.4, abs=0.05)
    # ratio targets h / rho by construction
    assert res.truth["minority_in_group_ratio"] == pytest.approx(8.0, rel=0.2)


def test_null_case_no_homophily():
    cfg = small_cfg(n=4000, minority_fraction=0.1, homophily=0.1,
                    mean_out_degree=4.0, seed=5)
    res = generate(cfg)
    assert res.truth["minority_in_group_ratio"] == pytest.approx(1.0, abs=0.25)


def test_validation_errors():
    with pytest.raises(ValueError, match="minority fraction"):
        generate(small_cfg(minority_fraction=0.0))
    with pytest.raises(ValueError, match="homophily"):
        generate(small_cfg(minority_fraction=0.2, homophily=0.1))
    with pytest.raises(ValueError, match="homophily"):
        generate(small_cfg(homophily=1.5))
    with pytest.raises(ValueError, match="fewer than 2"):
        generate(small_cfg(n=30, minority_fraction=0.01))
    with pytest.raises(ValueError, match="infeasible"):
        generate(small_cfg(n=300, minority_fraction=0.02, homophily=1.0,
                           mean_out_degree=10.0))


def test_lexicon_seeding():
    cfg = small_cfg(lexicon_rate=1.0, seed=7)
    res = generate(cfg)
    minority = set(res.minority_ids)
    assert set(res.seeded_ids) == minority     # q=1: every minority user seeds
    matcher = PhraseMatcher(res.lexicon)
    for uid in res.seeded_ids:
        assert any(matcher.matches_text(t) for t in res.profiles[uid].tweets)
    res0 = generate(small_cfg(lexicon_rate=0.0, seed=7))
    assert res0.seeded_ids == []


def test_label_subset():
    res = generate(small_cfg(label_count=50))
    assert len(res.labeled_ids) == 50
    assert res.truth["labeled_count"] == 50
    assert set(res.labeled_ids) <= set(res.graph.index_to_id)


def test_suspension_rates_differ_by_class():
    cfg = small_cfg(n=2000, minority_fraction=0.25,
                    suspend_minority_rate=0.8, suspend_majority_rate=0.01,
                    seed=13)
    res = generate(cfg)
    minority = set(res.minority_ids)
    susp = set(res.suspended_ids)
    min_rate = len(susp & minority) / len(minority)
    maj_rate = len(susp - minority) / (cfg.n - len(minority))
    assert min_rate > 0.7
    assert maj_rate < 0.05


def test_profiles_differ_by_class():
    cfg = small_cfg(n=2000, minority_fraction=0.25, activity_multiplier=3.0,
                    followers_multiplier=0.3, seed=17)
    res = generate(cfg)
    minority = set(res.minority_ids)

    def mean(ids, attr):
        return float(np.mean([getattr(res.profiles[u], attr) for u in ids]))

    majority = [u for u in res.graph.index_to_id if u not in minority]
    assert mean(res.minority_ids, "statuses_count") > mean(majority, "statuses_count")
    assert mean(res.minority_ids, "followers_count") < mean(majority, "followers_count")


def test_written_outputs_reingest(tmp_path):
    cfg = small_cfg(lexicon_rate=0.4, label_count=100)
    res = generate(cfg)
    write_outputs(res, tmp_path, {"seed": cfg.seed})

    g = ingest_edges(tmp_path / "edges.tsv",
                     extra_node_ids=res.graph.index_to_id)
    assert g.n == cfg.n
    assert g.num_edges == res.graph.num_edges

    profiles = ingest_users(tmp_path / "users.jsonl")
    assert len(profiles) == cfg.n
    p = profiles["u000000"]
    assert p.created_at < REFERENCE_DATE
    assert len(p.tweets) == cfg.tweets_per_user
    assert len(p.tweet_times) == cfg.tweets_per_user
    assert p.statuses_count >= cfg.tweets_per_user

    labels = read_labels(tmp_path / "labels.csv")
    assert len(labels.labels) == 100
    minority = set(res.minority_ids)
    for uid, label in labels.labels.items():
        assert (label == "hateful") == (uid in minority)

    truth = json.loads((tmp_path / "truth.json").read_text())
    assert truth["parameters"]["seed"] == cfg.seed
    assert truth["n"] == cfg.n

    vec_lines = [l for l in (tmp_path / "vectors.txt").read_text().splitlines()
                 if l and not l.startswith("#")]
    assert all(len(l.split()) == 1 + cfg.vector_dim for l in vec_lines)
    assert len(vec_lines) == len(res.vectors)


def test_tweet_times_precede_reference():
    res = generate(small_cfg())
    for uid in list(res.graph.index_to_id)[:50]:
        p = res.profiles[uid]
        assert all(t <= REFERENCE_DATE for t in p.tweet_times)
        assert p.created_at <= min(p.tweet_times)
