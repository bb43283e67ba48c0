"""Budgeted random-walk sampling of a directed graph seen through an oracle.

The walker builds an undirected image of the directed graph as it goes: every
time a node's out-list is fetched, those edges join the undirected graph and
stay there.  Each move either jumps to a uniformly random node, with
probability w / (w + d(v)) where d(v) is the node's current undirected degree,
or steps to a uniform undirected neighbor.  The cost model charges one unit
per out-list fetch (first visits only); revisits are free and still recorded.
Visit records carry enough state to reweight the sample afterwards.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Protocol

import numpy as np

from hategraph.graph import RetweetGraph

logger = logging.getLogger(__name__)

DEFAULT_JUMP_WEIGHT = 10.0


class GraphOracle(Protocol):
    """Minimal crawl interface: out-lists by id plus uniform node draws."""

    def out_neighbors(self, node_id: str) -> list: ...

    def random_node(self, rng: np.random.Generator) -> str: ...


class FileOracle:
    """Oracle over an already-ingested graph, for replay and testing."""

    def __init__(self, g: RetweetGraph):
        self.g = g

    def out_neighbors(self, node_id: str) -> list:
        idx = self.g.id_to_index[node_id]
        return [self.g.index_to_id[j] for j in self.g.out_neighbors(idx)]

    def random_node(self, rng: np.random.Generator) -> str:
        return self.g.index_to_id[int(rng.integers(self.g.n))]


@dataclass
class WalkVisit:
    node: str
    undirected_degree: int   # degree in the walker's graph when recorded
    out_degree: int          # true out-degree reported by the oracle


@dataclass
class WalkRecord:
    visits: list = field(default_factory=list)
    jump_weight: float = DEFAULT_JUMP_WEIGHT
    budget_used: int = 0
    steps: int = 0
    partial: bool = False


def durw_sample(oracle: GraphOracle, budget: int,
                jump_weight: float = DEFAULT_JUMP_WEIGHT, seed: int = 0,
                max_steps: Optional[int] = None) -> tuple:
    """Walk until `budget` out-list fetches are spent.

    Returns (sample, record) where sample is the directed graph of every
    discovered edge.  max_steps bounds total moves (default 50 * budget) so a
    walk trapped among visited nodes still terminates.  If the oracle raises,
    the partial sample collected so far is returned with record.partial set.
    """
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    if jump_weight <= 0:
        raise ValueError(f"jump weight must be positive, got {jump_weight}")
    if max_steps is None:
        max_steps = 50 * budget
    rng = np.random.default_rng(seed)
    record = WalkRecord(jump_weight=float(jump_weight))

    neighbors: dict = {}      # node -> list of undirected neighbors, fetch order
    neighbor_sets: dict = {}  # membership mirror of `neighbors`
    out_degree: dict = {}     # node -> true out-degree (known once fetched)
    edges: list = []          # discovered directed edges

    def touch(node):
        if node not in neighbor_sets:
            neighbor_sets[node] = set()
            neighbors[node] = []

    def add_undirected(a, b):
        touch(a)
        touch(b)
        if b not in neighbor_sets[a]:
            neighbor_sets[a].add(b)
            neighbors[a].append(b)
        if a not in neighbor_sets[b]:
            neighbor_sets[b].add(a)
            neighbors[b].append(a)

    def fetch(node):
        outs = oracle.out_neighbors(node)
        record.budget_used += 1
        out_degree[node] = len(outs)
        touch(node)
        for dst in outs:
            edges.append((node, dst))
            if dst != node:
                add_undirected(node, dst)

    def build_sample():
        node_ids = sorted(neighbor_sets)
        id_to_index = {u: i for i, u in enumerate(node_ids)}
        if edges:
            src = np.array([id_to_index[a] for a, b in edges], dtype=np.int64)
            dst = np.array([id_to_index[b] for a, b in edges], dtype=np.int64)
        else:
            src = np.zeros(0, dtype=np.int64)
            dst = np.zeros(0, dtype=np.int64)
        return RetweetGraph.from_edge_arrays(src, dst, node_ids)

    try:
        current = oracle.random_node(rng)
        fetch(current)
        record.visits.append(WalkVisit(current, len(neighbor_sets[current]),
                                       out_degree[current]))
        while record.steps < max_steps:
            record.steps += 1
            deg = len(neighbor_sets[current])
            if deg == 0 or rng.random() < jump_weight / (jump_weight + deg):
                nxt = oracle.random_node(rng)
            else:
                nxt = neighbors[current][int(rng.integers(deg))]
            if nxt not in out_degree:
                if record.budget_used >= budget:
                    break
                fetch(nxt)
            current = nxt
            record.visits.append(WalkVisit(current, len(neighbor_sets[current]),
                                           out_degree[current]))
    except Exception as exc:  # oracle failure: keep what we have
        logger.warning("oracle failed after %d queries: %s", record.budget_used, exc)
        record.partial = True

    return build_sample(), record


def estimate_outdegree_dist(record: WalkRecord,
                            jump_weight: Optional[float] = None) -> dict:
    """Reweighted out-degree distribution from walk visits.

    Each visit is weighted by 1 / (d(v) + w), which cancels the walk's
    stationary bias toward high-degree nodes; the result sums to 1.
    """
    if not record.visits:
        raise ValueError("cannot estimate from an empty walk record")
    w = record.jump_weight if jump_weight is None else jump_weight
    totals: dict = {}
    norm = 0.0
    for v in record.visits:
        weight = 1.0 / (v.undirected_degree + w)
        totals[v.out_degree] = totals.get(v.out_degree, 0.0) + weight
        norm += weight
    return {k: totals[k] / norm for k in sorted(totals)}
