"""Synthetic retweet graphs with a planted homophilous minority.

Every node draws an out-degree from a scaled truncated power law, then picks
in-class destinations with probability h (minority sources) or the complement
rate that keeps the overall minority destination share at its prevalence
(majority sources).  Tweets come from class-conditional unigram models;
minority users additionally emit one lexicon phrase with probability q.
Profiles, text, and vectors are drawn from per-node RNG streams spawned off
the master seed, so generation is order-independent and reproducible.
"""

import datetime as dt
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from hategraph.graph import RetweetGraph, UserProfile
from hategraph.stats import mixing_table
from hategraph.util import provenance_line

REFERENCE_DATE = dt.datetime(2017, 10, 1, tzinfo=dt.timezone.utc)


@dataclass
class SynthConfig:
    n: int = 10000
    minority_fraction: float = 0.01
    homophily: float = 0.4            # P(dest minority | source minority)
    mean_out_degree: float = 2.0
    degree_exponent: float = 2.5
    max_out_degree: int = 1000
    vocab_size: int = 500
    vocab_overlap: float = 0.9        # fraction of vocabulary both classes share
    tweets_per_user: int = 20
    tokens_per_tweet: int = 9
    lexicon_rate: float = 0.0         # q: P(minority user emits a lexicon phrase)
    lexicon_size: int = 20
    activity_multiplier: float = 1.5  # minority rate scaling for statuses etc.
    followers_multiplier: float = 0.7
    minority_age_factor: float = 0.4  # minority accounts are newer by this factor
    suspend_minority_rate: float = 0.7
    suspend_majority_rate: float = 0.005
    vector_dim: int = 32
    label_count: Optional[int] = None  # None labels every node
    seed: int = 0


@dataclass
class SynthResult:
    graph: RetweetGraph
    profiles: dict                 # user id -> UserProfile
    minority_ids: list
    seeded_ids: list               # minority users that emitted a lexicon phrase
    suspended_ids: list
    labeled_ids: list
    lexicon: list
    vectors: dict                  # token -> np.ndarray
    config: SynthConfig
    truth: dict = field(default_factory=dict)


def _validate(cfg: SynthConfig) -> None:
    rho = cfg.minority_fraction
    if not 0.0 < rho < 1.0:
        raise ValueError(f"minority fraction must be in (0,1), got {rho}")
    if not rho <= cfg.homophily <= 1.0:
        raise ValueError(
            f"homophily must lie in [{rho}, 1], got {cfg.homophily}")
    for name in ("mean_out_degree", "degree_exponent", "tweets_per_user",
                 "tokens_per_tweet", "vocab_size", "vector_dim"):
        if getattr(cfg, name) <= 0:
            raise ValueError(f"{name} must be positive")
    if not 0.0 <= cfg.lexicon_rate <= 1.0:
        raise ValueError(f"lexicon rate must be in [0,1], got {cfg.lexicon_rate}")
    if not 0.0 <= cfg.vocab_overlap <= 1.0:
        raise ValueError(f"vocab overlap must be in [0,1], got {cfg.vocab_overlap}")
    n_min = int(round(rho * cfg.n))
    n_maj = cfg.n - n_min
    if n_min < 2 or n_maj < 2:
        raise ValueError(
            f"n={cfg.n} with minority fraction {rho} leaves a class with "
            "fewer than 2 members")
    # in-class destination pools must comfortably cover expected demand
    h_maj = rho * (1.0 - cfg.homophily) / (1.0 - rho)
    if cfg.mean_out_degree * cfg.homophily > 0.5 * (n_min - 1):
        raise ValueError(
            "infeasible combination: minority in-class demand "
            f"{cfg.mean_out_degree * cfg.homophily:.1f} exceeds half the pool "
            f"of {n_min - 1}")
    if cfg.mean_out_degree * h_maj > 0.5 * n_min:
        raise ValueError(
            "infeasible combination: majority demand for minority targets "
            "exceeds half the pool")


def _degree_sample(rng, cfg: SynthConfig, n: int) -> np.ndarray:
    """Truncated power-law out-degrees rescaled to the requested mean."""
    kmax = min(cfg.max_out_degree, n - 1)
    support = np.arange(1, kmax + 1, dtype=np.float64)
    pmf = support ** (-cfg.degree_exponent)
    pmf /= pmf.sum()
    base_mean = float(np.sum(support * pmf))
    scale = cfg.mean_out_degree / base_mean
    raw = rng.choice(np.arange(1, kmax + 1), size=n, p=pmf)
    return np.clip(np.rint(raw * scale).astype(np.int64), 1, kmax)


def _distinct(rng, pool: np.ndarray, k: int, exclude: int = -1) -> np.ndarray:
    """k distinct pool members, optionally skipping the position `exclude`."""
    size = len(pool) - (1 if exclude >= 0 else 0)
    k = min(k, size)
    if k <= 0:
        return pool[:0]
    if 3 * k >= size:
        positions = rng.permutation(size)[:k]
    else:
        seen = set()
        positions = []
        while len(positions) < k:
            for v in rng.integers(0, size, size=k - len(positions) + 1):
                v = int(v)
                if v not in seen:
                    seen.add(v)
                    positions.append(v)
                    if len(positions) == k:
                        break
        positions = np.array(positions, dtype=np.int64)
    if exclude >= 0:
        positions = positions + (positions >= exclude)
    return pool[positions]


def _vocabularies(cfg: SynthConfig) -> tuple:
    n_shared = int(round(cfg.vocab_size * cfg.vocab_overlap))
    n_own = cfg.vocab_size - n_shared
    shared = [f"tok{i}" for i in range(n_shared)]
    min_only = [f"mino{i}" for i in range(n_own)]
    maj_only = [f"majo{i}" for i in range(n_own)]
    lexicon = []
    for i in range(cfg.lexicon_size):
        if i % 2 == 0:
            lexicon.append(f"slur{i}")
        else:
            lexicon.append(f"slur{i}a slur{i}b")
    return shared + min_only, shared + maj_only, lexicon


def _profile(rng, uid, is_minority, cfg: SynthConfig, vocab, lexicon) -> tuple:
    """One user's profile; returns (profile, emitted_lexicon_phrase)."""
    act = cfg.activity_multiplier if is_minority else 1.0
    fol = cfg.followers_multiplier if is_minority else 1.0
    age_days = rng.uniform(120.0, 2400.0)
    if is_minority:
        age_days *= cfg.minority_age_factor
    age_days = max(2.0, age_days)
    status_rate = float(np.exp(rng.normal(np.log(5.0), 0.6))) * act
    follower_rate = float(np.exp(rng.normal(np.log(3.0), 0.8))) * fol
    followee_rate = float(np.exp(rng.normal(np.log(2.0), 0.7))) * act
    favorite_rate = float(np.exp(rng.normal(np.log(1.5), 0.9))) * act

    n_tweets = cfg.tweets_per_user
    token_ids = rng.integers(0, len(vocab), size=(n_tweets, cfg.tokens_per_tweet))
    tweets = [" ".join(vocab[j] for j in row) for row in token_ids]
    emitted = False
    if is_minority and n_tweets > 0 and rng.random() < cfg.lexicon_rate:
        phrase = lexicon[int(rng.integers(len(lexicon)))]
        slot = int(rng.integers(n_tweets))
        tweets[slot] = tweets[slot] + " " + phrase
        emitted = True

    gap = 86400.0 / max(status_rate, 1e-6)
    gap = min(gap, age_days * 86400.0 / (n_tweets + 1))
    offsets = np.cumsum(rng.exponential(gap, size=n_tweets))
    times = sorted(REFERENCE_DATE - dt.timedelta(seconds=float(o)) for o in offsets)
    created = min([REFERENCE_DATE - dt.timedelta(days=age_days)] + times) \
        - dt.timedelta(days=1)

    profile = UserProfile(
        id=uid,
        created_at=created,
        statuses_count=max(n_tweets, int(age_days * status_rate)),
        followers_count=int(age_days * follower_rate),
        followees_count=int(age_days * followee_rate),
        favorites_count=int(age_days * favorite_rate),
        tweets=tweets,
        tweet_times=times,
    )
    return profile, emitted


def generate(cfg: SynthConfig) -> SynthResult:
    """Build the graph, profiles, labels, lexicon, and token vectors.

    Per-node demand for in-class destinations is truncated to the class pool,
    which only matters in the extreme degree tail.  Edge counts equal the sum
    of drawn out-degrees exactly.
    """
    _validate(cfg)
    n = cfg.n
    rho = cfg.minority_fraction
    n_min = int(round(rho * n))
    master = np.random.SeedSequence(cfg.seed)
    ss_struct, ss_nodes, ss_misc = master.spawn(3)
    rng = np.random.default_rng(ss_struct)

    ids = [f"u{i:06d}" for i in range(n)]
    minority_idx = np.sort(rng.choice(n, size=n_min, replace=False))
    is_min = np.zeros(n, dtype=bool)
    is_min[minority_idx] = True
    pool_min = minority_idx.astype(np.int64)
    pool_maj = np.flatnonzero(~is_min).astype(np.int64)
    pos_in_min = {int(v): i for i, v in enumerate(pool_min)}
    pos_in_maj = {int(v): i for i, v in enumerate(pool_maj)}

    degrees = _degree_sample(rng, cfg, n)
    h_min = cfg.homophily
    h_maj = rho * (1.0 - h_min) / (1.0 - rho)

    src_list, dst_list = [], []
    for u in range(n):
        k = int(degrees[u])
        p_in = h_min if is_min[u] else h_maj
        avail_min = len(pool_min) - (1 if is_min[u] else 0)
        avail_maj = len(pool_maj) - (0 if is_min[u] else 1)
        # binomial class split, truncated to what each pool can supply
        t_min = max(min(int(rng.binomial(k, p_in)), avail_min), k - avail_maj)
        targets_min = _distinct(rng, pool_min, t_min,
                                pos_in_min[u] if is_min[u] else -1)
        targets_maj = _distinct(rng, pool_maj, k - t_min,
                                -1 if is_min[u] else pos_in_maj[u])
        for v in targets_min:
            src_list.append(u)
            dst_list.append(int(v))
        for v in targets_maj:
            src_list.append(u)
            dst_list.append(int(v))

    g = RetweetGraph.from_edge_arrays(
        np.array(src_list, dtype=np.int64), np.array(dst_list, dtype=np.int64),
        ids)

    vocab_min, vocab_maj, lexicon = _vocabularies(cfg)
    node_seeds = ss_nodes.spawn(n)
    profiles = {}
    seeded_ids = []
    for i in range(n):
        node_rng = np.random.default_rng(node_seeds[i])
        prof, emitted = _profile(node_rng, ids[i], bool(is_min[i]), cfg,
                                 vocab_min if is_min[i] else vocab_maj, lexicon)
        profiles[ids[i]] = prof
        if emitted:
            seeded_ids.append(ids[i])

    misc_rng = np.random.default_rng(ss_misc)
    suspended_ids = []
    for i in range(n):
        rate = cfg.suspend_minority_rate if is_min[i] else cfg.suspend_majority_rate
        if misc_rng.random() < rate:
            suspended_ids.append(ids[i])
    if cfg.label_count is None or cfg.label_count >= n:
        labeled_ids = list(ids)
    else:
        if cfg.label_count < 2:
            raise ValueError("label_count must be at least 2")
        pick = np.sort(misc_rng.choice(n, size=cfg.label_count, replace=False))
        labeled_ids = [ids[i] for i in pick]

    all_tokens = sorted(set(vocab_min) | set(vocab_maj)
                        | {t for phrase in lexicon for t in phrase.split()})
    vectors = {}
    for tok in all_tokens:
        v = misc_rng.normal(size=cfg.vector_dim)
        vectors[tok] = v / np.linalg.norm(v)

    node_type = {ids[i]: ("minority" if is_min[i] else "majority")
                 for i in range(n)}
    mix = mixing_table(g, node_type)
    minority_ids = [ids[i] for i in minority_idx]
    truth = {
        "n": n,
        "edges": g.num_edges,
        "minority_count": n_min,
        "prevalence": n_min / n,
        "seeded_count": len(seeded_ids),
        "suspended_count": len(suspended_ids),
        "labeled_count": len(labeled_ids),
        "reference_date": REFERENCE_DATE.isoformat(),
        "mixing": {f"{a}->{b}": mix.prob.get((a, b))
                   for a in mix.types for b in mix.types},
        "minority_in_group_ratio": mix.ratio.get(("minority", "minority")),
        "parameters": asdict(cfg),
    }
    return SynthResult(g, profiles, minority_ids, seeded_ids, suspended_ids,
                       labeled_ids, lexicon, vectors, cfg, truth)


def _iso(ts: dt.datetime) -> str:
    return ts.isoformat().replace("+00:00", "Z")


def write_outputs(result: SynthResult, out_dir, params: dict) -> list:
    """Emit every artifact; returns the list of paths written."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    g = result.graph
    cfg = result.config
    written = []

    def path(name):
        written.append(os.path.join(out_dir, name))
        return written[-1]

    header = provenance_line("synth", params)
    with open(path("edges.tsv"), "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for u, v in g.edges():
            fh.write(f"{g.index_to_id[u]}\t{g.index_to_id[v]}\n")

    with open(path("users.jsonl"), "w", encoding="utf-8") as fh:
        for uid in g.index_to_id:
            p = result.profiles[uid]
            obj = {
                "id": p.id,
                "created_at": _iso(p.created_at),
                "statuses_count": p.statuses_count,
                "followers_count": p.followers_count,
                "followees_count": p.followees_count,
                "favorites_count": p.favorites_count,
                "tweets": p.tweets,
                "tweet_times": [_iso(t) for t in p.tweet_times],
            }
            fh.write(json.dumps(obj, sort_keys=True) + "\n")

    minority = set(result.minority_ids)
    with open(path("labels.csv"), "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        fh.write("user_id,label\n")
        for uid in result.labeled_ids:
            fh.write(f"{uid},{'hateful' if uid in minority else 'normal'}\n")

    with open(path("suspended.csv"), "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        fh.write("user_id,checkpoint\n")
        for uid in result.suspended_ids:
            fh.write(f"{uid},synthetic\n")

    with open(path("lexicon.txt"), "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for phrase in result.lexicon:
            fh.write(phrase + "\n")

    with open(path("vectors.txt"), "w", encoding="utf-8") as fh:
        for tok in sorted(result.vectors):
            vec = " ".join(repr(float(x)) for x in result.vectors[tok])
            fh.write(f"{tok} {vec}\n")

    with open(path("truth.json"), "w", encoding="utf-8") as fh:
        json.dump(result.truth, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return written
