"""Per-user feature extraction: activity, spam proxies, centrality, text vectors.

The user block has a fixed column order (USER_FEATURE_COLUMNS); the text block
is the mean word vector of the user's tweets.  Users present in the graph but
without a profile get zero activity/spam features and has_profile=False so
downstream stages can tell "no data" from "zero rate".
"""

import datetime as dt
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from hategraph import centrality
from hategraph.graph import RetweetGraph, UserProfile
from hategraph.text import normalize_tokens, tokenize
from hategraph.util import data_lines, fmt, write_delimited

logger = logging.getLogger(__name__)

USER_FEATURE_COLUMNS = [
    "statuses_per_day",
    "followers_per_day",
    "followees_per_day",
    "favorites_count",
    "avg_tweet_interval_s",
    "urls_per_tweet",
    "hashtags_per_tweet",
    "followers_per_followee",
    "betweenness",
    "eigenvector",
    "in_degree",
    "out_degree",
]


def account_age_days(profile: UserProfile, reference_date: dt.datetime) -> int:
    """Whole days from account creation to the reference date, at least 1."""
    if profile.created_at >= reference_date:
        raise ValueError(
            f"user {profile.id}: created_at {profile.created_at.isoformat()} "
            f"is not before the reference date {reference_date.isoformat()}")
    seconds = (reference_date - profile.created_at).total_seconds()
    return max(1, int(seconds // 86400))


def activity_features(profile: UserProfile, reference_date: dt.datetime) -> dict:
    """Rates per day of account age, plus mean seconds between tweets.

    The interval is 0.0 when fewer than two tweet timestamps exist; callers
    that need to distinguish that case check interval_defined.
    """
    days = account_age_days(profile, reference_date)
    out = {
        "statuses_per_day": profile.statuses_count / days,
        "followers_per_day": profile.followers_count / days,
        "followees_per_day": profile.followees_count / days,
        "favorites_count": float(profile.favorites_count),
        "avg_tweet_interval_s": 0.0,
        "interval_defined": False,
    }
    if profile.tweet_times is not None and len(profile.tweet_times) >= 2:
        times = sorted(profile.tweet_times)
        gaps = [(b - a).total_seconds() for a, b in zip(times, times[1:])]
        out["avg_tweet_interval_s"] = sum(gaps) / len(gaps)
        out["interval_defined"] = True
    return out


def spam_features(profile: UserProfile) -> dict:
    """URL and hashtag density plus the followers-per-followee ratio.

    Tokens are raw whitespace splits: a URL is a token starting with http://
    or https://, a hashtag is '#' followed by an alphanumeric character.
    """
    n_urls = 0
    n_tags = 0
    for tweet in profile.tweets:
        for tok in tokenize(tweet):
            if tok.startswith("http://") or tok.startswith("https://"):
                n_urls += 1
            elif len(tok) >= 2 and tok[0] == "#" and tok[1].isalnum():
                n_tags += 1
    n_tweets = max(1, len(profile.tweets))
    denom = profile.followees_count if profile.followees_count > 0 else 1
    return {
        "urls_per_tweet": n_urls / n_tweets,
        "hashtags_per_tweet": n_tags / n_tweets,
        "followers_per_followee": profile.followers_count / denom,
    }


def load_word_vectors(path) -> tuple[dict, int]:
    """Read `word v1 .. vD` lines; dimension fixed by the first vector."""
    vectors = {}
    dim = None
    for lineno, line in data_lines(path):
        parts = line.split()
        if dim is None:
            dim = len(parts) - 1
            if dim < 1:
                raise ValueError(f"{path}:{lineno}: no vector components")
        if len(parts) != dim + 1:
            raise ValueError(
                f"{path}:{lineno}: expected {dim + 1} fields, got {len(parts)}")
        try:
            vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
        vectors[parts[0]] = vec
    if not vectors:
        raise ValueError(f"{path}: no vectors found")
    return vectors, dim


def embed_user(profile: UserProfile, vectors: dict, dim: int) -> tuple[np.ndarray, bool]:
    """Mean over tweets of the mean vector of each tweet's known tokens.

    Tweets with no known token are skipped; a user with no such tweet gets the
    zero vector and known=False.
    """
    tweet_means = []
    for tweet in profile.tweets:
        hits = [vectors[t] for t in normalize_tokens(tweet) if t in vectors]
        if hits:
            tweet_means.append(np.mean(hits, axis=0))
    if not tweet_means:
        return np.zeros(dim, dtype=np.float64), False
    return np.mean(tweet_means, axis=0), True


@dataclass
class FeatureTable:
    user_ids: list
    columns: list                 # names of the user-feature block
    x_user: np.ndarray            # (n, len(columns))
    x_text: np.ndarray            # (n, dim)
    has_profile: np.ndarray       # bool (n,)
    text_known: np.ndarray        # bool (n,)
    eigen_converged: bool = True
    eigen_simple: bool = True
    index: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {u: i for i, u in enumerate(self.user_ids)}

    def matrix(self, feature_set: str) -> np.ndarray:
        if feature_set == "user+vec":
            return np.hstack([self.x_user, self.x_text])
        if feature_set == "vec":
            return self.x_text
        if feature_set == "user":
            return self.x_user
        raise ValueError(f"unknown feature set {feature_set!r} "
                         "(expected user+vec, vec, or user)")


def build_features(g: RetweetGraph, profiles: dict, vectors: dict, dim: int,
                   reference_date: dt.datetime, bc_sources: Optional[int] = None,
                   seed: int = 0) -> FeatureTable:
    """Assemble the full per-user table in graph node order.

    bc_sources=None picks exact betweenness for graphs up to 50k nodes and a
    2048-source estimate above that; pass 0 to force exact.
    """
    n = g.n
    x_user = np.zeros((n, len(USER_FEATURE_COLUMNS)), dtype=np.float64)
    x_text = np.zeros((n, dim), dtype=np.float64)
    has_profile = np.zeros(n, dtype=bool)
    text_known = np.zeros(n, dtype=bool)
    col = {name: j for j, name in enumerate(USER_FEATURE_COLUMNS)}

    for i, uid in enumerate(g.index_to_id):
        prof = profiles.get(uid)
        if prof is None:
            continue
        has_profile[i] = True
        acts = activity_features(prof, reference_date)
        spam = spam_features(prof)
        for name in ("statuses_per_day", "followers_per_day", "followees_per_day",
                     "favorites_count", "avg_tweet_interval_s"):
            x_user[i, col[name]] = acts[name]
        for name in ("urls_per_tweet", "hashtags_per_tweet", "followers_per_followee"):
            x_user[i, col[name]] = spam[name]
        vec, known = embed_user(prof, vectors, dim)
        x_text[i] = vec
        text_known[i] = known

    if bc_sources is None and n > 50000:
        bc_sources = 2048
    if bc_sources in (None, 0) or (bc_sources is not None and bc_sources >= n):
        bc = centrality.betweenness(g)
    else:
        bc = centrality.betweenness(g, sources=bc_sources, seed=seed)
        logger.info("betweenness estimated from %d sources", bc_sources)
    eig = centrality.eigenvector_centrality(g, seed=seed)
    if not eig.converged:
        logger.warning("eigenvector centrality did not converge")
    if not eig.dominant_simple:
        logger.warning("dominant eigenvalue is not simple; scores depend on start")

    x_user[:, col["betweenness"]] = bc
    x_user[:, col["eigenvector"]] = eig.scores
    x_user[:, col["in_degree"]] = g.in_degrees().astype(np.float64)
    x_user[:, col["out_degree"]] = g.out_degrees().astype(np.float64)

    return FeatureTable(list(g.index_to_id), list(USER_FEATURE_COLUMNS),
                        x_user, x_text, has_profile, text_known,
                        eig.converged, eig.dominant_simple)


def align_to_graph(table: FeatureTable, g: RetweetGraph) -> FeatureTable:
    """Reorder feature rows into graph node order, erroring on missing users."""
    missing = [u for u in g.index_to_id if u not in table.index]
    if missing:
        shown = ", ".join(missing[:10])
        more = "" if len(missing) <= 10 else f" (+{len(missing) - 10} more)"
        raise ValueError(f"features missing for graph users: {shown}{more}")
    rows = np.array([table.index[u] for u in g.index_to_id], dtype=np.int64)
    return FeatureTable(list(g.index_to_id), list(table.columns),
                        table.x_user[rows], table.x_text[rows],
                        table.has_profile[rows], table.text_known[rows],
                        table.eigen_converged, table.eigen_simple)


def write_features(path, table: FeatureTable, params: dict) -> None:
    dim = table.x_text.shape[1]
    header = (["user_id", "has_profile"] + table.columns
              + ["text_known"] + [f"v{j:03d}" for j in range(dim)])

    def rows():
        for i, uid in enumerate(table.user_ids):
            yield ([uid, int(table.has_profile[i])]
                   + [fmt(v) for v in table.x_user[i]]
                   + [int(table.text_known[i])]
                   + [fmt(v) for v in table.x_text[i]])

    write_delimited(path, header, rows(), "features", params)


def read_features(path) -> FeatureTable:
    user_ids, user_rows, text_rows = [], [], []
    has_profile, text_known = [], []
    header = None
    n_user = len(USER_FEATURE_COLUMNS)
    for lineno, line in data_lines(path):
        parts = line.split(",")
        if header is None:
            header = parts
            expected = (["user_id", "has_profile"] + USER_FEATURE_COLUMNS
                        + ["text_known"])
            if header[:len(expected)] != expected:
                raise ValueError(f"{path}: unexpected feature columns")
            continue
        if len(parts) != len(header):
            raise ValueError(
                f"{path}:{lineno}: expected {len(header)} fields, got {len(parts)}")
        user_ids.append(parts[0])
        has_profile.append(parts[1] == "1")
        user_rows.append([float(x) for x in parts[2:2 + n_user]])
        text_known.append(parts[2 + n_user] == "1")
        text_rows.append([float(x) for x in parts[3 + n_user:]])
    if header is None:
        raise ValueError(f"{path}: empty feature file")
    return FeatureTable(user_ids, list(USER_FEATURE_COLUMNS),
                        np.array(user_rows, dtype=np.float64),
                        np.array(text_rows, dtype=np.float64),
                        np.array(has_profile, dtype=bool),
                        np.array(text_known, dtype=bool))
