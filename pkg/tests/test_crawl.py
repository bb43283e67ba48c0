import numpy as np
import pytest

from conftest import build_graph, random_digraph
from hategraph.crawl import (FileOracle, WalkRecord, WalkVisit, durw_sample,
                             estimate_outdegree_dist)


class FlakyOracle(FileOracle):
    """Raises after a fixed number of out-list fetches."""

    def __init__(self, g, fail_after):
        super().__init__(g)
        self.calls = 0
        self.fail_after = fail_after

    def out_neighbors(self, node_id):
        self.calls += 1
        if self.calls > self.fail_after:
            raise ConnectionError("simulated outage")
        return super().out_neighbors(node_id)


def test_walk_is_deterministic(rng):
    g = random_digraph(rng, 200, 600)
    s1, r1 = durw_sample(FileOracle(g), budget=50, seed=9)
    s2, r2 = durw_sample(FileOracle(g), budget=50, seed=9)
    assert [v.node for v in r1.visits] == [v.node for v in r2.visits]
    assert s1.index_to_id == s2.index_to_id
    s3, _ = durw_sample(FileOracle(g), budget=50, seed=10)
    assert s3.index_to_id != s1.index_to_id


def test_budget_is_respected(rng):
    g = random_digraph(rng, 300, 900)
    _, record = durw_sample(FileOracle(g), budget=40, seed=1)
    assert record.budget_used <= 40
    unique_visited = {v.node for v in record.visits}
    assert len(unique_visited) == record.budget_used  # one fetch per first visit


def test_revisits_are_free_and_recorded():
    # two-node cycle with tiny jump weight: the walk oscillates for free
    g = build_graph([0, 1], [1, 0], 2)
    _, record = durw_sample(FileOracle(g), budget=2, jump_weight=0.01,
                            seed=0, max_steps=50)
    assert record.budget_used == 2
    assert len(record.visits) > 10
    assert record.steps == 50


def test_sample_contains_fetched_edges(rng):
    g = random_digraph(rng, 100, 400)
    sample, record = durw_sample(FileOracle(g), budget=30, seed=2)
    fetched = {v.node for v in record.visits}
    for uid in fetched:
        i = g.id_to_index[uid]
        si = sample.id_to_index[uid]
        got = sorted(sample.index_to_id[j] for j in sample.out_neighbors(si))
        want = sorted(g.index_to_id[j] for j in g.out_neighbors(i))
        assert got == want


def test_oracle_failure_yields_partial(rng):
    g = random_digraph(rng, 100, 300)
    oracle = FlakyOracle(g, fail_after=5)
    sample, record = durw_sample(oracle, budget=50, seed=3)
    assert record.partial
    assert record.budget_used == 5
    assert sample.n > 0


def test_walk_validations(rng):
    g = random_digraph(rng, 10, 20)
    with pytest.raises(ValueError, match="budget"):
        durw_sample(FileOracle(g), budget=0)
    with pytest.raises(ValueError, match="jump weight"):
        durw_sample(FileOracle(g), budget=1, jump_weight=0.0)


def test_estimator_weights_and_normalization():
    record = WalkRecord(jump_weight=2.0)
    record.visits = [WalkVisit("a", 2, 5), WalkVisit("b", 6, 1),
                     WalkVisit("a", 2, 5)]
    est = estimate_outdegree_dist(record)
    # weights: a 1/4 twice, b 1/8; P(5) = (1/2)/(5/8), P(1) = (1/8)/(5/8)
    assert est[5] == pytest.approx(0.8)
    assert est[1] == pytest.approx(0.2)
    assert sum(est.values()) == pytest.approx(1.0)
    assert list(est) == sorted(est)


def test_estimator_jump_weight_override():
    record = WalkRecord(jump_weight=2.0)
    record.visits = [WalkVisit("a", 0, 3)]
    assert estimate_outdegree_dist(record, jump_weight=7.0) == {3: 1.0}


def test_estimator_empty_record():
    with pytest.raises(ValueError, match="empty"):
        estimate_outdegree_dist(WalkRecord())


def test_estimator_regular_graph_is_exact(rng):
    # every node has out-degree 2: the estimate must be a point mass
    n = 50
    src = np.repeat(np.arange(n), 2)
    dst = (src + np.tile([1, 2], n)) % n
    g = build_graph(src, dst, n)
    _, record = durw_sample(FileOracle(g), budget=25, seed=4)
    assert estimate_outdegree_dist(record) == {2: 1.0}


def test_estimator_recovers_distribution(rng):
    # mixture of out-degrees 1 and 9; enough budget pins the TV distance down
    n = 1500
    deg = np.where(rng.random(n) < 0.7, 1, 9)
    src = np.repeat(np.arange(n), deg)
    dst = rng.integers(0, n, size=len(src))
    keep = src != dst
    g = build_graph(src[keep], dst[keep], n)
    true_dist = np.bincount([g.out_degree(i) for i in range(n)],
                            minlength=11) / n

    tvs = []
    for seed in range(5):
        _, record = durw_sample(FileOracle(g), budget=350, seed=seed)
        est = estimate_outdegree_dist(record)
        support = set(est) | {k for k in range(11) if true_dist[k] > 0}
        tv = 0.5 * sum(abs(est.get(k, 0.0)
                           - (true_dist[k] if k < 11 else 0.0))
                       for k in support)
        tvs.append(tv)
    assert np.mean(tvs) < 0.08
