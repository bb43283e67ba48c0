"""Group comparison statistics and graph mixing tables.

Welch's unequal-variance t test and the two-sample Kolmogorov-Smirnov test
are computed from first principles; only the regularized incomplete beta and
the Kolmogorov distribution come from scipy.special.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import betainc, kolmogorov

from hategraph.graph import RetweetGraph
from hategraph.text import PhraseMatcher, normalize_tokens
from hategraph.util import data_lines


@dataclass
class WelchResult:
    t: float
    df: float
    p: float
    zero_variance: bool = False


def welch_t(a, b) -> WelchResult:
    """Two-sided Welch t test with Welch-Satterthwaite degrees of freedom."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("welch_t needs at least two observations per group")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("welch_t requires finite values")
    na, nb = len(a), len(b)
    ma, mb = a.mean(), b.mean()
    va, vb = a.var(ddof=1), b.var(ddof=1)
    if va == 0.0 and vb == 0.0:
        if ma == mb:
            return WelchResult(0.0, float("nan"), 1.0, True)
        t = float("inf") if ma > mb else float("-inf")
        return WelchResult(t, float("nan"), 0.0, True)
    sa, sb = va / na, vb / nb
    t = (ma - mb) / np.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa ** 2 / (na - 1) + sb ** 2 / (nb - 1))
    # two-sided p from the regularized incomplete beta
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return WelchResult(float(t), float(df), p)


@dataclass
class KSResult:
    d: float
    p: float


def ks2(a, b) -> KSResult:
    """Two-sample KS statistic with the asymptotic Kolmogorov p-value."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if len(a) == 0 or len(b) == 0:
        raise ValueError("ks2 needs non-empty samples")
    na, nb = len(a), len(b)
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / na
    cdf_b = np.searchsorted(b, grid, side="right") / nb
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    en = na * nb / (na + nb)
    p = float(kolmogorov(np.sqrt(en) * d))
    return KSResult(d, min(1.0, max(0.0, p)))


def load_token_set(path) -> set:
    """One entry per line; used for word category files."""
    out = set()
    for _, line in data_lines(path):
        out.add(line.strip().lower())
    if not out:
        raise ValueError(f"{path}: empty word list")
    return out


def load_valence(path) -> dict:
    """TAB-separated `word<TAB>score` lines."""
    out = {}
    for lineno, line in data_lines(path):
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 2 TAB-separated fields")
        try:
            out[parts[0].strip().lower()] = float(parts[1])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: bad score {parts[1]!r}") from None
    if not out:
        raise ValueError(f"{path}: empty valence table")
    return out


def category_occurrence(tweets, categories: dict) -> dict:
    """Fraction of a user's normalized tokens that fall in each category."""
    tokens = [t for tweet in tweets for t in normalize_tokens(tweet)]
    total = len(tokens)
    if total == 0:
        return {name: 0.0 for name in categories}
    out = {}
    for name, words in categories.items():
        out[name] = sum(1 for t in tokens if t in words) / total
    return out


def sentiment_and_profanity(tweets, valence: dict,
                            badwords: PhraseMatcher) -> tuple:
    """(mean per-tweet valence of matched words, bad-phrase matches per tweet)."""
    tweet_scores = []
    n_bad = 0
    for tweet in tweets:
        tokens = normalize_tokens(tweet)
        hits = [valence[t] for t in tokens if t in valence]
        if hits:
            tweet_scores.append(sum(hits) / len(hits))
        n_bad += badwords.count_matches(tokens)
    sentiment = sum(tweet_scores) / len(tweet_scores) if tweet_scores else 0.0
    profanity = n_bad / max(1, len(tweets))
    return sentiment, profanity


@dataclass
class MixingTable:
    types: list
    prob: dict          # (src_type, dst_type) -> P(dest type | source type)
    ratio: dict         # prob / prevalence of dest type
    prevalence: dict    # type -> node fraction
    out_edges: dict     # type -> total out-edges from that type
    undefined: set      # source types with zero out-edges


def mixing_table(g: RetweetGraph, node_type: dict) -> MixingTable:
    """Edge mixing between node types, normalized per source type.

    node_type maps user id -> type string; nodes absent from the map get type
    "other".  Probabilities condition on all out-edges of the source type, so
    each source row sums to 1 over destination types.
    """
    types_arr = np.array([node_type.get(uid, "other") for uid in g.index_to_id])
    types = sorted(set(types_arr.tolist()))
    tindex = {t: k for k, t in enumerate(types)}
    codes = np.array([tindex[t] for t in types_arr], dtype=np.int64)
    nt = len(types)

    counts = np.zeros((nt, nt), dtype=np.int64)
    src_codes = np.repeat(codes, np.diff(g.out_indptr))
    dst_codes = codes[g.out_indices]
    np.add.at(counts, (src_codes, dst_codes), 1)

    row_sums = counts.sum(axis=1)
    prevalence = {t: float(np.sum(codes == k)) / g.n for t, k in tindex.items()}
    prob, ratio = {}, {}
    undefined = set()
    for ts, ks in tindex.items():
        if row_sums[ks] == 0:
            undefined.add(ts)
            continue
        for td, kd in tindex.items():
            p = counts[ks, kd] / row_sums[ks]
            prob[(ts, td)] = float(p)
            prev = prevalence[td]
            ratio[(ts, td)] = float(p / prev) if prev > 0 else float("nan")
    out_edges = {t: int(row_sums[k]) for t, k in tindex.items()}
    return MixingTable(types, prob, ratio, prevalence, out_edges, undefined)


def neighbor_group(g: RetweetGraph, member_idx, exclude_idx) -> np.ndarray:
    """Indices adjacent (either direction) to member_idx, minus exclude_idx."""
    indptr, indices = g.undirected_neighbors()
    mask = np.zeros(g.n, dtype=bool)
    for i in member_idx:
        mask[indices[indptr[i]:indptr[i + 1]]] = True
    mask[np.asarray(exclude_idx, dtype=np.int64)] = False
    return np.flatnonzero(mask)


@dataclass
class GroupComparison:
    metric: str
    group_a: str
    group_b: str
    n_a: int
    mean_a: float
    ci95_a: float
    median_a: float
    n_b: int
    mean_b: float
    ci95_b: float
    median_b: float
    welch: Optional[WelchResult] = None
    ks: Optional[KSResult] = None


def _summary(x: np.ndarray) -> tuple:
    n = len(x)
    mean = float(np.mean(x)) if n else 0.0
    ci = float(1.96 * np.std(x, ddof=1) / np.sqrt(n)) if n >= 2 else 0.0
    med = float(np.median(x)) if n else 0.0
    return n, mean, ci, med


def compare_groups(metrics: dict, groups: dict, pairs) -> list:
    """Welch + KS comparison of every metric over the requested group pairs.

    metrics maps name -> per-node array; groups maps name -> node index array.
    Pairs whose groups are too small for a test still get summary rows, with
    the tests left unset.
    """
    rows = []
    for ga, gb in pairs:
        ia, ib = groups[ga], groups[gb]
        for metric in metrics:
            va = np.asarray(metrics[metric], dtype=np.float64)[ia]
            vb = np.asarray(metrics[metric], dtype=np.float64)[ib]
            na, ma, ca, da = _summary(va)
            nb, mb, cb, db = _summary(vb)
            row = GroupComparison(metric, ga, gb, na, ma, ca, da, nb, mb, cb, db)
            if na >= 2 and nb >= 2:
                row.welch = welch_t(va, vb)
                row.ks = ks2(va, vb)
            rows.append(row)
    return rows
