"""Directed retweet-graph data model, user-profile store and file ingestion.

The graph is immutable once built: dense integer indices, CSR neighbor lists
in both directions, and a persisted id map.  An edge u -> v records that u
retweeted (endorsed) v; influence is modeled as flowing v -> u and that
inversion is applied where needed by the consumers, not here.
"""

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from hategraph.util import data_lines

log = logging.getLogger("hategraph.graph")

MAX_TWEETS = 200

LABEL_HATEFUL = "hateful"
LABEL_NORMAL = "normal"


class IngestError(ValueError):
    """Malformed input file (carries file/line context in the message)."""


class RetweetGraph:
    """Immutable directed graph with dense indices and CSR adjacency both ways.

    Neighbor lists are sorted and duplicate-free; `out` and `in` views are
    exact transposes of each other.
    """

    __slots__ = ("n", "out_indptr", "out_indices", "in_indptr", "in_indices",
                 "index_to_id", "id_to_index")

    def __init__(self, n, out_indptr, out_indices, in_indptr, in_indices, index_to_id):
        self.n = int(n)
        self.out_indptr = out_indptr
        self.out_indices = out_indices
        self.in_indptr = in_indptr
        self.in_indices = in_indices
        self.index_to_id = list(index_to_id)
        self.id_to_index = {uid: i for i, uid in enumerate(self.index_to_id)}

    @classmethod
    def from_edge_arrays(cls, src, dst, index_to_id):
        """Build from parallel source/target index arrays (dedupes, sorts)."""
        n = len(index_to_id)
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        if len(src):
            key = src * np.int64(n) + dst
            key = np.unique(key)
            src = key // n
            dst = key % n
        out_indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(out_indptr, src + 1, 1)
        np.cumsum(out_indptr, out=out_indptr)
        out_indices = dst.astype(np.int64)  # already sorted by (src, dst)

        order = np.lexsort((src, dst))
        in_indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(in_indptr, dst + 1, 1)
        np.cumsum(in_indptr, out=in_indptr)
        in_indices = src[order]
        return cls(n, out_indptr, out_indices, in_indptr, in_indices, index_to_id)

    @property
    def num_edges(self) -> int:
        return int(len(self.out_indices))

    def out_neighbors(self, i: int) -> np.ndarray:
        return self.out_indices[self.out_indptr[i]:self.out_indptr[i + 1]]

    def in_neighbors(self, i: int) -> np.ndarray:
        return self.in_indices[self.in_indptr[i]:self.in_indptr[i + 1]]

    def out_degree(self, i: int) -> int:
        return int(self.out_indptr[i + 1] - self.out_indptr[i])

    def in_degree(self, i: int) -> int:
        return int(self.in_indptr[i + 1] - self.in_indptr[i])

    def out_degrees(self) -> np.ndarray:
        return np.diff(self.out_indptr)

    def in_degrees(self) -> np.ndarray:
        return np.diff(self.in_indptr)

    def edges(self):
        """Iterate (src_index, dst_index) pairs in CSR order."""
        for u in range(self.n):
            for v in self.out_neighbors(u):
                yield u, int(v)

    def undirected_neighbors(self):
        """CSR (indptr, indices) of the undirected view (union, deduped)."""
        pairs_src = np.concatenate([
            np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.out_indptr)),
            np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.in_indptr)),
        ])
        pairs_dst = np.concatenate([self.out_indices, self.in_indices])
        if len(pairs_src) == 0:
            return np.zeros(self.n + 1, dtype=np.int64), np.zeros(0, dtype=np.int64)
        key = np.unique(pairs_src * np.int64(self.n) + pairs_dst)
        src = key // self.n
        dst = key % self.n
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        np.cumsum(indptr, out=indptr)
        return indptr, dst


def invert(g: RetweetGraph) -> RetweetGraph:
    """Transpose the edge set; applying twice returns the original graph."""
    return RetweetGraph(g.n, g.in_indptr, g.in_indices, g.out_indptr, g.out_indices,
                        g.index_to_id)


def ingest_edges(path, extra_node_ids=None) -> RetweetGraph:
    """Load a `source<TAB>target` edge file into a dense-indexed graph.

    Duplicate lines collapse to one edge; self-loop lines are dropped (the
    graph carries none at ingestion time; diffusion adds its own self loops).
    Indices are assigned by first appearance in the file, so identical bytes
    give identical index maps.
    """
    id_to_index: dict[str, int] = {}
    index_to_id: list[str] = []
    src_list: list[int] = []
    dst_list: list[int] = []
    self_loops = 0

    def intern(uid: str) -> int:
        idx = id_to_index.get(uid)
        if idx is None:
            idx = len(index_to_id)
            id_to_index[uid] = idx
            index_to_id.append(uid)
        return idx

    saw_line = False
    for lineno, line in data_lines(path):
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise IngestError(f"{path}: line {lineno}: expected 'source<TAB>target', got {line!r}")
        saw_line = True
        if parts[0] == parts[1]:
            self_loops += 1
            intern(parts[0])
            continue
        src_list.append(intern(parts[0]))
        dst_list.append(intern(parts[1]))

    if not saw_line:
        raise IngestError(f"{path}: no edges found")
    if self_loops:
        log.warning("%s: dropped %d self-loop line(s)", path, self_loops)

    for uid in extra_node_ids or ():
        intern(uid)

    return RetweetGraph.from_edge_arrays(src_list, dst_list, index_to_id)


@dataclass
class UserProfile:
    """Per-user activity counters, creation timestamp, and raw tweet texts."""

    id: str
    created_at: datetime
    statuses_count: int
    followers_count: int
    followees_count: int
    favorites_count: int
    tweets: list[str] = field(default_factory=list)
    tweet_times: list[datetime] | None = None
    suspended_flags: dict[str, bool] | None = None


_REQUIRED_PROFILE_FIELDS = ("id", "created_at", "statuses_count", "followers_count",
                            "followees_count", "favorites_count", "tweets")


def parse_timestamp(value: str) -> datetime:
    """ISO-8601 -> aware UTC datetime (naive values are taken as UTC)."""
    ts = datetime.fromisoformat(str(value).replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def ingest_users(path) -> dict[str, UserProfile]:
    """Load JSON Lines user profiles keyed by id.

    More than 200 tweets truncate to the most recent 200 (by `tweet_times`
    when present, else the tail of the list, which is taken to be
    chronological).  Duplicate or incomplete records are errors.
    """
    profiles: dict[str, UserProfile] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"{path}: line {lineno}: invalid JSON ({exc})") from None
            missing = [f for f in _REQUIRED_PROFILE_FIELDS if f not in obj]
            uid = obj.get("id", f"<line {lineno}>")
            if missing:
                raise IngestError(f"{path}: user {uid}: missing field(s) {', '.join(missing)}")
            if uid in profiles:
                raise IngestError(f"{path}: duplicate user id {uid!r} on line {lineno}")
            for counter in ("statuses_count", "followers_count", "followees_count",
                            "favorites_count"):
                if int(obj[counter]) < 0:
                    raise IngestError(f"{path}: user {uid}: negative {counter}")
            tweets = [str(t) for t in obj["tweets"]]
            times = obj.get("tweet_times")
            if times is not None:
                if len(times) != len(tweets):
                    raise IngestError(f"{path}: user {uid}: tweet_times length mismatch")
                times = [parse_timestamp(t) for t in times]
            if len(tweets) > MAX_TWEETS:
                log.warning("%s: user %s has %d tweets, keeping most recent %d",
                            path, uid, len(tweets), MAX_TWEETS)
                if times is not None:
                    order = sorted(range(len(tweets)), key=lambda i: (times[i], i))
                    keep = sorted(order[-MAX_TWEETS:])
                    tweets = [tweets[i] for i in keep]
                    times = [times[i] for i in keep]
                else:
                    tweets = tweets[-MAX_TWEETS:]
            profiles[str(uid)] = UserProfile(
                id=str(uid),
                created_at=parse_timestamp(obj["created_at"]),
                statuses_count=int(obj["statuses_count"]),
                followers_count=int(obj["followers_count"]),
                followees_count=int(obj["followees_count"]),
                favorites_count=int(obj["favorites_count"]),
                tweets=tweets,
                tweet_times=times,
            )
    return profiles


def profiles_not_in_graph(profiles: dict[str, UserProfile], g: RetweetGraph) -> list[str]:
    """Ids present in the profile store but absent from the graph (retained, flagged)."""
    return [uid for uid in profiles if uid not in g.id_to_index]


@dataclass
class LabelSet:
    """Ground-truth labels: hateful/normal annotations plus suspension flags."""

    labels: dict[str, str] = field(default_factory=dict)
    suspended: dict[str, str] = field(default_factory=dict)  # id -> checkpoint

    def hateful_ids(self):
        return [u for u, l in self.labels.items() if l == LABEL_HATEFUL]

    def normal_ids(self):
        return [u for u, l in self.labels.items() if l == LABEL_NORMAL]

    def validate_against(self, g: RetweetGraph):
        unknown = [u for u in self.labels if u not in g.id_to_index]
        unknown += [u for u in self.suspended if u not in g.id_to_index]
        if unknown:
            raise IngestError(
                f"labeled id(s) not in graph: {', '.join(sorted(unknown)[:10])}"
                + ("..." if len(unknown) > 10 else ""))


def read_labels(path) -> LabelSet:
    """labels.csv: header `user_id,label`, label in {hateful, normal}."""
    labels = {}
    rows = list(data_lines(path))
    if not rows:
        raise IngestError(f"{path}: empty labels file")
    header_lineno, header = rows[0]
    if [c.strip() for c in header.split(",")[:2]] != ["user_id", "label"]:
        raise IngestError(f"{path}: line {header_lineno}: expected header 'user_id,label'")
    for lineno, line in rows[1:]:
        parts = line.split(",")
        if len(parts) < 2:
            raise IngestError(f"{path}: line {lineno}: expected 'user_id,label'")
        uid, label = parts[0].strip(), parts[1].strip().lower()
        if label not in (LABEL_HATEFUL, LABEL_NORMAL):
            raise IngestError(f"{path}: line {lineno}: unknown label {label!r}")
        if uid in labels:
            raise IngestError(f"{path}: line {lineno}: duplicate label for {uid!r}")
        labels[uid] = label
    return LabelSet(labels=labels)


def read_suspended(path, into: LabelSet | None = None) -> LabelSet:
    """suspended.csv: header `user_id,checkpoint`; listed users are suspended."""
    ls = into or LabelSet()
    rows = list(data_lines(path))
    if not rows:
        raise IngestError(f"{path}: empty suspended file")
    header_lineno, header = rows[0]
    if [c.strip() for c in header.split(",")[:2]] != ["user_id", "checkpoint"]:
        raise IngestError(f"{path}: line {header_lineno}: expected header 'user_id,checkpoint'")
    for lineno, line in rows[1:]:
        parts = line.split(",")
        if len(parts) < 2:
            raise IngestError(f"{path}: line {lineno}: expected 'user_id,checkpoint'")
        ls.suspended[parts[0].strip()] = parts[1].strip()
    return ls
