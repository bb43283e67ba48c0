"""Shared fixtures: graph builders, profile factory, brute-force oracles."""

import csv

import numpy as np
import pytest

from hategraph.graph import RetweetGraph, UserProfile, parse_timestamp


def build_graph(src, dst, n=None):
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if n is None:
        n = int(max(src.max(initial=-1), dst.max(initial=-1))) + 1
    return RetweetGraph.from_edge_arrays(src, dst, [f"u{i}" for i in range(n)])


def random_digraph(rng, n, m):
    """Random simple digraph; self-loops removed, duplicates collapsed."""
    src = rng.integers(0, n, size=m)
    dst = rng.integers(0, n, size=m)
    keep = src != dst
    return build_graph(src[keep], dst[keep], n)


def make_profile(uid, tweets=(), created="2016-01-01T00:00:00Z",
                 statuses=100, followers=50, followees=25, favorites=10,
                 times=None):
    if times is not None:
        times = [parse_timestamp(t) for t in times]
    return UserProfile(
        id=uid, created_at=parse_timestamp(created), statuses_count=statuses,
        followers_count=followers, followees_count=followees,
        favorites_count=favorites, tweets=list(tweets), tweet_times=times)


def brute_betweenness(g):
    """Per-pair shortest-path enumeration; O(n^2 (n+m)), fine below ~15 nodes."""
    n = g.n
    INF = float("inf")

    def bfs(start, neigh):
        dist = [INF] * n
        sigma = [0] * n
        dist[start] = 0
        sigma[start] = 1
        queue = [start]
        head = 0
        while head < len(queue):
            u = queue[head]
            head += 1
            for w in neigh(u):
                w = int(w)
                if dist[w] == INF:
                    dist[w] = dist[u] + 1
                    queue.append(w)
                if dist[w] == dist[u] + 1:
                    sigma[w] += sigma[u]
        return dist, sigma

    bc = np.zeros(n)
    for s in range(n):
        dist_s, sigma_s = bfs(s, g.out_neighbors)
        for t in range(n):
            if s == t or dist_s[t] == INF:
                continue
            dist_t, sigma_t = bfs(t, g.in_neighbors)
            for v in range(n):
                if v in (s, t):
                    continue
                if dist_s[v] + dist_t[v] == dist_s[t]:
                    bc[v] += sigma_s[v] * sigma_t[v] / sigma_s[t]
    return bc


def brute_auc(scores, y01):
    """All-pairs comparison with half-credit ties."""
    scores = np.asarray(scores, dtype=np.float64)
    y = np.asarray(y01)
    pos = scores[y == 1]
    neg = scores[y == 0]
    wins = np.sum(pos[:, None] > neg[None, :])
    ties = np.sum(pos[:, None] == neg[None, :])
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


def fill_votes(export_path, import_path, hateful_ids):
    """Simulate annotators: unanimous votes matching class membership."""
    with open(export_path, encoding="utf-8") as fh:
        first = fh.readline()
        assert first.startswith("#")
        rows = list(csv.DictReader(fh))
    fieldnames = list(rows[0].keys())
    vote_cols = [c for c in fieldnames if c.startswith("annotator_")]
    with open(import_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            vote = "h" if row["user_id"] in hateful_ids else "n"
            for col in vote_cols:
                row[col] = vote
            writer.writerow(row)
    return len(rows)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def chain3():
    """a -> b -> c: retweet direction, so influence runs c -> b -> a."""
    return build_graph([0, 1], [1, 2], 3)
