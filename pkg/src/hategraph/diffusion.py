"""Lexicon seeding, averaging-based belief diffusion and stratified sampling.

Beliefs start at 1 for users whose tweets contain a lexicon phrase and 0
elsewhere, then mix along the influence direction: each user's next belief is
the uniform average of their own and of every user they retweeted (self loop
included), i.e. p(t) = T p(t-1) with T = row-normalize(A + I) on the retweet
adjacency A.  Row u therefore spans u itself plus u's retweet targets.
"""

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from hategraph.graph import (LABEL_HATEFUL, LABEL_NORMAL, IngestError, LabelSet,
                             RetweetGraph, UserProfile)
from hategraph.text import PhraseMatcher, normalize_tokens
from hategraph.util import data_lines, fmt, provenance_line

DEFAULT_STEPS = 2
DEFAULT_BOUNDS = (0.25, 0.50, 0.75)
DEFAULT_CAP = 1500
MIN_ANNOTATORS = 3


def load_lexicon(path) -> list[str]:
    """One lowercase phrase per line; duplicates are dropped, empty file errors."""
    phrases: list[str] = []
    seen = set()
    for _, line in data_lines(path):
        phrase = line.strip().lower()
        if phrase and phrase not in seen:
            seen.add(phrase)
            phrases.append(phrase)
    if not phrases:
        raise IngestError(f"{path}: lexicon is empty")
    return phrases


def seed_beliefs(g: RetweetGraph, profiles: dict[str, UserProfile],
                 lexicon: list[str]) -> np.ndarray:
    """Initial beliefs: 1 iff any tweet contains a lexicon phrase, else 0."""
    matcher = PhraseMatcher(lexicon)
    p0 = np.zeros(g.n, dtype=np.float64)
    for uid, profile in profiles.items():
        idx = g.id_to_index.get(uid)
        if idx is None:
            continue
        for tweet in profile.tweets:
            if matcher.matches_text(tweet):
                p0[idx] = 1.0
                break
    return p0


def build_transition(g: RetweetGraph) -> sp.csr_matrix:
    """Row-stochastic T: row u puts weight 1/(1+out_deg(u)) on u and on each
    user u retweeted.  The self loop guarantees no zero rows."""
    degs = g.out_degrees()
    nodes = np.arange(g.n, dtype=np.int64)
    weights = 1.0 / (1.0 + degs.astype(np.float64))
    rows = np.concatenate([np.repeat(nodes, degs), nodes])
    cols = np.concatenate([g.out_indices, nodes])
    data = np.concatenate([np.repeat(weights, degs), weights])
    return sp.coo_matrix((data, (rows, cols)), shape=(g.n, g.n)).tocsr()


def diffuse(T: sp.csr_matrix, p0: np.ndarray, steps: int = DEFAULT_STEPS,
            clamp_seeds: bool = False) -> np.ndarray:
    """p(t) = T^t p(0) by repeated sparse multiply; beliefs stay in [0, 1].

    With `clamp_seeds`, entries that start at 1 are reset to 1 after every
    step (the non-default variant exposed for study).
    """
    if T.shape[0] != len(p0):
        raise ValueError(f"dimension mismatch: T is {T.shape[0]}x{T.shape[1]}, "
                         f"p0 has {len(p0)} entries")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    p = np.asarray(p0, dtype=np.float64).copy()
    seeds = p >= 1.0 if clamp_seeds else None
    for _ in range(steps):
        p = T @ p
        np.clip(p, 0.0, 1.0, out=p)
        if clamp_seeds:
            p[seeds] = 1.0
    return p


def stratum_of(belief: float, bounds=DEFAULT_BOUNDS) -> int:
    """1-based stratum index: half-open intervals, last one closed at 1."""
    return 1 + int(np.searchsorted(np.asarray(bounds), belief, side="right"))


@dataclass
class StratumAssignment:
    user_id: str
    belief: float
    stratum: int
    selected: bool


def select_strata(user_ids, beliefs: np.ndarray, bounds=DEFAULT_BOUNDS,
                  cap: int = DEFAULT_CAP, seed: int = 0) -> list[StratumAssignment]:
    """Assign each user to a belief stratum and select up to `cap` per stratum
    uniformly at random (seeded)."""
    bounds = tuple(bounds)
    if any(not (0.0 < b < 1.0) for b in bounds) or list(bounds) != sorted(set(bounds)):
        raise ValueError(f"bounds must be strictly increasing within (0,1): {bounds}")
    beliefs = np.asarray(beliefs, dtype=np.float64)
    strata = 1 + np.searchsorted(np.asarray(bounds), beliefs, side="right")
    rng = np.random.default_rng(seed)
    selected = np.zeros(len(user_ids), dtype=bool)
    for s in range(1, len(bounds) + 2):
        members = np.flatnonzero(strata == s)
        if len(members) == 0:
            continue
        take = min(cap, len(members))
        chosen = rng.choice(members, size=take, replace=False)
        selected[chosen] = True
    return [StratumAssignment(uid, float(beliefs[i]), int(strata[i]), bool(selected[i]))
            for i, uid in enumerate(user_ids)]


def stratify(p: np.ndarray, g: RetweetGraph, bounds=DEFAULT_BOUNDS,
             cap: int = DEFAULT_CAP, seed: int = 0) -> list[StratumAssignment]:
    return select_strata(g.index_to_id, p, bounds, cap, seed)


def write_beliefs(path, assignments: list[StratumAssignment], stage_params: dict,
                  stage: str = "diffuse", include_selected: bool = False):
    from hategraph.util import write_delimited
    header = ["user_id", "belief", "stratum"]
    if include_selected:
        header.append("selected")
        rows = ([a.user_id, fmt(a.belief), a.stratum, int(a.selected)]
                for a in assignments)
    else:
        rows = ([a.user_id, fmt(a.belief), a.stratum] for a in assignments)
    write_delimited(path, header, rows, stage=stage, params=stage_params)


def read_beliefs(path) -> list[StratumAssignment]:
    rows = list(data_lines(path))
    if not rows:
        raise IngestError(f"{path}: empty beliefs file")
    header = [c.strip() for c in rows[0][1].split(",")]
    if header[:3] != ["user_id", "belief", "stratum"]:
        raise IngestError(f"{path}: expected header 'user_id,belief,stratum[,selected]'")
    out = []
    for lineno, line in rows[1:]:
        parts = line.split(",")
        if len(parts) < 3:
            raise IngestError(f"{path}: line {lineno}: too few columns")
        sel = bool(int(parts[3])) if len(parts) > 3 else False
        out.append(StratumAssignment(parts[0], float(parts[1]), int(parts[2]), sel))
    return out


def export_annotation_batch(path, selected_ids: list[str],
                            profiles: dict[str, UserProfile],
                            stage_params: dict, n_annotators: int = MIN_ANNOTATORS):
    """CSV handed to human annotators: id + concatenated tweets + empty vote
    columns.  Votes are filled offline and read back by import_annotations."""
    if n_annotators < MIN_ANNOTATORS:
        raise ValueError(f"minimum {MIN_ANNOTATORS} annotators")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(provenance_line("annotate-export", stage_params) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["user_id", "tweets"]
                        + [f"annotator_{i + 1}" for i in range(n_annotators)]
                        + ["label"])
        for uid in selected_ids:
            profile = profiles.get(uid)
            tweets = " ||| ".join(profile.tweets) if profile else ""
            writer.writerow([uid, tweets] + [""] * n_annotators + [""])


_VOTE_ALIASES = {"h": LABEL_HATEFUL, "hateful": LABEL_HATEFUL,
                 "n": LABEL_NORMAL, "normal": LABEL_NORMAL}


def import_annotations(path, g: RetweetGraph) -> LabelSet:
    """Majority vote over >=3 annotator columns; ties and unknown ids error."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            fh.seek(0)
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise IngestError(f"{path}: empty annotation file")
        vote_cols = [c for c in reader.fieldnames if c.startswith("annotator_")]
        labels = {}
        for rownum, row in enumerate(reader, start=2):
            uid = row["user_id"]
            if uid not in g.id_to_index:
                raise IngestError(f"{path}: row {rownum}: unknown user id {uid!r}")
            if uid in labels:
                raise IngestError(f"{path}: row {rownum}: duplicate user id {uid!r}")
            votes = []
            for col in vote_cols:
                raw = (row.get(col) or "").strip().lower()
                if not raw:
                    continue
                if raw not in _VOTE_ALIASES:
                    raise IngestError(f"{path}: row {rownum}: unknown vote {raw!r}")
                votes.append(_VOTE_ALIASES[raw])
            if len(votes) < MIN_ANNOTATORS:
                raise IngestError(
                    f"{path}: row {rownum}: user {uid}: minimum {MIN_ANNOTATORS} annotators "
                    f"required, got {len(votes)}")
            n_hate = votes.count(LABEL_HATEFUL)
            n_norm = len(votes) - n_hate
            if n_hate == n_norm:
                raise IngestError(f"{path}: row {rownum}: user {uid}: tied vote")
            labels[uid] = LABEL_HATEFUL if n_hate > n_norm else LABEL_NORMAL
    return LabelSet(labels=labels)
