"""Command-line pipeline: every stage is a subcommand over the shared formats.

Options resolve in three layers: built-in defaults, then `--config` file
entries (flat `key = value` lines), then explicit CLI flags.  Config keys must
belong to some stage; keys for other stages are ignored by the current one,
anything unrecognized is an error.  Exit codes: 0 success, 1 validation
error (bad inputs, bad config), 2 runtime failure.
"""

import argparse
import datetime as dt
import json
import logging
import os
import sys
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

import hategraph
from hategraph import crawl as crawl_mod
from hategraph import diffusion, evaluate, features, figures, stats, synth
from hategraph.graph import (IngestError, ingest_edges, ingest_users,
                             profiles_not_in_graph, read_labels, read_suspended)
from hategraph.models import save_model
from hategraph.models.sage import SageConfig, train_sage
from hategraph.models.boosting import train_adaboost, train_gbt
from hategraph.util import (config_hash, data_lines, fmt, provenance_line,
                            write_delimited)

logger = logging.getLogger("hategraph")

_REQUIRED = object()


class ValidationError(Exception):
    pass


@dataclass
class Opt:
    name: str                      # flag name without leading dashes
    parse: Callable
    default: object = None         # _REQUIRED marks mandatory options
    help: str = ""
    is_input_path: bool = False    # validated for existence before running


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _floats(text) -> tuple:
    return tuple(float(x) for x in str(text).split(",") if x.strip())


def _strs(text) -> tuple:
    return tuple(x.strip() for x in str(text).split(",") if x.strip())


def _date(text) -> dt.datetime:
    from hategraph.graph import parse_timestamp
    return parse_timestamp(str(text))


def _opt_int(text) -> Optional[int]:
    if text is None or str(text).strip().lower() in ("", "none"):
        return None
    return int(text)


_COMMON = [
    Opt("config", str, None, "flat key = value option file", is_input_path=True),
    Opt("threads", int, 1, "worker count for parallel stages (1 = fully serial)"),
    Opt("verbose", _bool, False, "log progress to stderr"),
]

_SPECS = {
    "ingest": [
        Opt("edges", str, _REQUIRED, "edges.tsv input", is_input_path=True),
        Opt("users", str, None, "users.jsonl input", is_input_path=True),
        Opt("out", str, "summary.json", "summary output path"),
    ],
    "crawl": [
        Opt("edges", str, _REQUIRED, "full graph the oracle serves", is_input_path=True),
        Opt("budget", int, _REQUIRED, "out-list fetches allowed"),
        Opt("jump-weight", float, crawl_mod.DEFAULT_JUMP_WEIGHT,
            "random-jump weight w"),
        Opt("seed", int, 0, "walk RNG seed"),
        Opt("max-steps", _opt_int, None, "hard cap on walk moves"),
        Opt("out-dir", str, "crawl_out", "directory for sample + estimate"),
    ],
    "diffuse": [
        Opt("edges", str, _REQUIRED, "edges.tsv input", is_input_path=True),
        Opt("users", str, _REQUIRED, "users.jsonl input", is_input_path=True),
        Opt("lexicon", str, _REQUIRED, "lexicon.txt input", is_input_path=True),
        Opt("steps", int, diffusion.DEFAULT_STEPS, "diffusion steps t"),
        Opt("clamp-seeds", _bool, False, "hold seeded users at belief 1"),
        Opt("bounds", _floats, diffusion.DEFAULT_BOUNDS, "stratum boundaries"),
        Opt("out", str, "beliefs.csv", "beliefs output path"),
    ],
    "stratify": [
        Opt("beliefs", str, _REQUIRED, "beliefs.csv from diffuse", is_input_path=True),
        Opt("bounds", _floats, diffusion.DEFAULT_BOUNDS, "stratum boundaries"),
        Opt("cap", int, diffusion.DEFAULT_CAP, "max selected per stratum"),
        Opt("seed", int, 0, "selection RNG seed"),
        Opt("out", str, "strata.csv", "stratified selection output"),
    ],
    "annotate-export": [
        Opt("strata", str, _REQUIRED, "strata.csv from stratify", is_input_path=True),
        Opt("users", str, _REQUIRED, "users.jsonl input", is_input_path=True),
        Opt("annotators", int, diffusion.MIN_ANNOTATORS, "vote columns to emit"),
        Opt("out", str, "annotation.csv", "annotation batch output"),
    ],
    "annotate-import": [
        Opt("annotations", str, _REQUIRED, "filled annotation CSV", is_input_path=True),
        Opt("edges", str, _REQUIRED, "graph the ids must belong to", is_input_path=True),
        Opt("out", str, "labels.csv", "labels output path"),
    ],
    "features": [
        Opt("edges", str, _REQUIRED, "edges.tsv input", is_input_path=True),
        Opt("users", str, _REQUIRED, "users.jsonl input", is_input_path=True),
        Opt("vectors", str, _REQUIRED, "word vector table", is_input_path=True),
        Opt("reference-date", _date, _REQUIRED,
            "ISO-8601 instant all rates are measured against"),
        Opt("bc-sources", _opt_int, None,
            "betweenness source sample (0 = exact; default exact up to 50k nodes)"),
        Opt("seed", int, 0, "seed when betweenness sources are sampled"),
        Opt("out", str, "features.csv", "feature table output"),
    ],
    "stats": [
        Opt("edges", str, _REQUIRED, "edges.tsv input", is_input_path=True),
        Opt("users", str, _REQUIRED, "users.jsonl input", is_input_path=True),
        Opt("features-file", str, _REQUIRED, "features.csv input", is_input_path=True),
        Opt("labels", str, _REQUIRED, "labels.csv input", is_input_path=True),
        Opt("suspended", str, None, "suspended.csv input", is_input_path=True),
        Opt("categories", str, None, "directory of <name>.txt word lists",
            is_input_path=True),
        Opt("valence", str, None, "valence.tsv sentiment table", is_input_path=True),
        Opt("badwords", str, None, "profane phrase list", is_input_path=True),
        Opt("reference-date", _date, _REQUIRED,
            "ISO-8601 instant account ages are measured against"),
        Opt("render", _bool, True, "render PNG figures next to the plot data"),
        Opt("out-dir", str, "stats_out", "directory for report + plotdata"),
    ],
    "train": [
        Opt("edges", str, _REQUIRED, "edges.tsv input", is_input_path=True),
        Opt("features-file", str, _REQUIRED, "features.csv input", is_input_path=True),
        Opt("labels", str, _REQUIRED, "labels.csv input", is_input_path=True),
        Opt("suspended", str, None, "suspended.csv (for --task suspended)",
            is_input_path=True),
        Opt("task", str, "hateful", "hateful or suspended"),
        Opt("model", str, "gbt", "sage, adaboost, or gbt"),
        Opt("feature-set", str, "user+vec", "user+vec, vec, or user"),
        Opt("seed", int, 0, "training seed"),
        Opt("rounds", int, 100, "adaboost rounds"),
        Opt("trees", int, 100, "gbt trees"),
        Opt("sage-epochs", int, 10, "sage training epochs"),
        Opt("sage-hidden", int, 128, "sage hidden width"),
        Opt("out", str, "model.json", "model output path"),
    ],
    "evaluate": [
        Opt("edges", str, _REQUIRED, "edges.tsv input", is_input_path=True),
        Opt("features-file", str, _REQUIRED, "features.csv input", is_input_path=True),
        Opt("labels", str, _REQUIRED, "labels.csv input", is_input_path=True),
        Opt("suspended", str, None, "suspended.csv (for --task suspended)",
            is_input_path=True),
        Opt("task", str, "hateful", "hateful or suspended"),
        Opt("models", _strs, evaluate.MODEL_NAMES, "models to cross-validate"),
        Opt("features", _strs, evaluate.FEATURE_SETS,
            "feature sets: user+vec and/or vec"),
        Opt("folds", int, 5, "cross-validation folds"),
        Opt("seed", int, 0, "fold + training seed"),
        Opt("rounds", int, 100, "adaboost rounds"),
        Opt("trees", int, 100, "gbt trees"),
        Opt("sage-epochs", int, 10, "sage training epochs"),
        Opt("sage-hidden", int, 128, "sage hidden width"),
        Opt("out-dir", str, "eval_out", "directory for report.json/report.csv"),
    ],
    "synth": [
        Opt("n", int, 10000, "node count"),
        Opt("minority-fraction", float, 0.01, "planted minority fraction"),
        Opt("homophily", float, 0.4, "P(dest minority | source minority)"),
        Opt("mean-out-degree", float, 2.0, "average out-degree"),
        Opt("degree-exponent", float, 2.5, "power-law exponent"),
        Opt("max-out-degree", int, 1000, "degree cap"),
        Opt("vocab-size", int, 500, "per-class vocabulary size"),
        Opt("vocab-overlap", float, 0.9, "shared fraction of the vocabularies"),
        Opt("tweets-per-user", int, 20, "tweets per profile"),
        Opt("tokens-per-tweet", int, 9, "tokens per tweet"),
        Opt("lexicon-rate", float, 0.0, "P(minority user emits a lexicon phrase)"),
        Opt("lexicon-size", int, 20, "lexicon phrase count"),
        Opt("activity-multiplier", float, 1.5, "minority activity scaling"),
        Opt("followers-multiplier", float, 0.7, "minority follower scaling"),
        Opt("vector-dim", int, 32, "emitted word-vector dimension"),
        Opt("label-count", _opt_int, None, "labeled subset size (default all)"),
        Opt("seed", int, 0, "master generation seed"),
        Opt("out-dir", str, "synth_out", "directory for generated artifacts"),
    ],
}

_ALL_KEYS = {o.name.replace("-", "_") for spec in _SPECS.values() for o in spec}
_ALL_KEYS |= {o.name.replace("-", "_") for o in _COMMON}


def read_config_file(path) -> dict:
    """Flat `key = value` lines; `#` comments and blank lines ignored."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(
                    f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if key in out:
                raise ValidationError(f"{path}:{lineno}: duplicate key {key!r}")
            out[key] = value.strip()
    return out


def resolve_options(command: str, args: argparse.Namespace) -> dict:
    """Defaults, then config file entries, then explicit CLI flags."""
    spec = _SPECS[command] + _COMMON
    config = {}
    if args.config is not None:
        if not os.path.exists(args.config):
            raise ValidationError(f"missing config file: {args.config}")
        config = read_config_file(args.config)
        unknown = sorted(set(config) - _ALL_KEYS)
        if unknown:
            raise ValidationError(
                f"unknown config key(s): {', '.join(unknown)}")
    values = {}
    for opt in spec:
        dest = opt.name.replace("-", "_")
        cli_value = getattr(args, dest, None)
        if cli_value is not None:
            values[dest] = cli_value
        elif dest in config:
            try:
                values[dest] = opt.parse(config[dest])
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"config key {dest}: {exc}") from None
        elif opt.default is _REQUIRED:
            raise ValidationError(f"missing required option --{opt.name}")
        else:
            values[dest] = opt.default
    for opt in spec:
        dest = opt.name.replace("-", "_")
        if opt.is_input_path and values[dest] is not None:
            if not os.path.exists(values[dest]):
                raise ValidationError(f"missing input file: {values[dest]}")
    return values


def provenance_params(values: dict) -> dict:
    """Flatten resolved options into the provenance/config-hash mapping."""
    out = {}
    for key, val in values.items():
        if key in ("verbose",):
            continue
        if isinstance(val, dt.datetime):
            out[key] = val.isoformat()
        elif isinstance(val, tuple):
            out[key] = ",".join(str(v) for v in val)
        else:
            out[key] = val
    return out


def write_json_artifact(path, payload: dict, stage: str, params: dict) -> None:
    body = {
        "provenance": {
            "tool": "hategraph",
            "version": hategraph.__version__,
            "stage": stage,
            "config_hash": config_hash(params),
            "seeds": {k: v for k, v in params.items() if "seed" in k},
        },
    }
    body.update(payload)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_ingest(v: dict) -> int:
    g = ingest_edges(v["edges"])
    payload = {"nodes": g.n, "edges": g.num_edges}
    if v["users"]:
        profiles = ingest_users(v["users"])
        orphans = profiles_not_in_graph(profiles, g)
        payload.update(profiles=len(profiles), orphan_profiles=len(orphans))
    write_json_artifact(v["out"], payload, "ingest", provenance_params(v))
    print(f"ingest: {g.n} nodes, {g.num_edges} edges -> {v['out']}")
    return 0


def cmd_crawl(v: dict) -> int:
    g = ingest_edges(v["edges"])
    oracle = crawl_mod.FileOracle(g)
    sample, record = crawl_mod.durw_sample(
        oracle, v["budget"], v["jump_weight"], v["seed"], v["max_steps"])
    params = provenance_params(v)
    os.makedirs(v["out_dir"], exist_ok=True)
    sample_path = os.path.join(v["out_dir"], "sample_edges.tsv")
    # edge lists carry no header row, only the provenance comment
    with open(sample_path, "w", encoding="utf-8") as fh:
        fh.write(provenance_line("crawl", params) + "\n")
        for u, w in sample.edges():
            fh.write(f"{sample.index_to_id[u]}\t{sample.index_to_id[w]}\n")
    est = crawl_mod.estimate_outdegree_dist(record)
    write_delimited(
        os.path.join(v["out_dir"], "outdegree_est.csv"),
        ["out_degree", "probability"],
        ([k, fmt(val)] for k, val in est.items()),
        "crawl", params)
    write_json_artifact(
        os.path.join(v["out_dir"], "crawl_summary.json"),
        {"budget_used": record.budget_used, "steps": record.steps,
         "visits": len(record.visits), "partial": record.partial,
         "sample_nodes": sample.n, "sample_edges": sample.num_edges},
        "crawl", params)
    print(f"crawl: {record.budget_used} fetches, {len(record.visits)} visits, "
          f"sample {sample.n} nodes -> {v['out_dir']}")
    return 0


def cmd_diffuse(v: dict) -> int:
    g = ingest_edges(v["edges"])
    profiles = ingest_users(v["users"])
    orphans = profiles_not_in_graph(profiles, g)
    if orphans:
        logger.warning("%d profiles not in graph are ignored", len(orphans))
    lexicon = diffusion.load_lexicon(v["lexicon"])
    p0 = diffusion.seed_beliefs(g, profiles, lexicon)
    T = diffusion.build_transition(g)
    p = diffusion.diffuse(T, p0, v["steps"], clamp_seeds=v["clamp_seeds"])
    assignments = [
        diffusion.StratumAssignment(
            g.index_to_id[i], float(p[i]),
            diffusion.stratum_of(float(p[i]), v["bounds"]), False)
        for i in range(g.n)
    ]
    diffusion.write_beliefs(v["out"], assignments, provenance_params(v),
                            stage="diffuse", include_selected=False)
    print(f"diffuse: {int(np.sum(p0 > 0))} seeds, {v['steps']} steps -> {v['out']}")
    return 0


def cmd_stratify(v: dict) -> int:
    rows = diffusion.read_beliefs(v["beliefs"])
    out_rows = diffusion.select_strata(
        [r.user_id for r in rows], np.array([r.belief for r in rows]),
        v["bounds"], v["cap"], v["seed"])
    diffusion.write_beliefs(v["out"], out_rows, provenance_params(v),
                            stage="stratify", include_selected=True)
    n_sel = sum(r.selected for r in out_rows)
    print(f"stratify: {n_sel} of {len(rows)} users selected -> {v['out']}")
    return 0


def cmd_annotate_export(v: dict) -> int:
    rows = diffusion.read_beliefs(v["strata"])
    selected = [r.user_id for r in rows if r.selected]
    if not selected:
        raise ValidationError(f"{v['strata']}: no selected users to export")
    profiles = ingest_users(v["users"])
    diffusion.export_annotation_batch(v["out"], selected, profiles,
                                      provenance_params(v), v["annotators"])
    print(f"annotate-export: {len(selected)} users -> {v['out']}")
    return 0


def cmd_annotate_import(v: dict) -> int:
    g = ingest_edges(v["edges"])
    label_set = diffusion.import_annotations(v["annotations"], g)
    params = provenance_params(v)
    write_delimited(
        v["out"], ["user_id", "label"],
        ([uid, label] for uid, label in sorted(label_set.labels.items())),
        "annotate-import", params)
    print(f"annotate-import: {len(label_set.labels)} labels -> {v['out']}")
    return 0


def cmd_features(v: dict) -> int:
    g = ingest_edges(v["edges"])
    profiles = ingest_users(v["users"])
    vectors, dim = features.load_word_vectors(v["vectors"])
    table = features.build_features(g, profiles, vectors, dim,
                                    v["reference_date"], v["bc_sources"],
                                    v["seed"])
    features.write_features(v["out"], table, provenance_params(v))
    print(f"features: {g.n} users x {len(table.columns)}+{dim} columns "
          f"-> {v['out']}")
    return 0


def _metric_frame(g, table, profiles, v):
    """(metrics dict, activity metric names, spam/centrality/text names)."""
    metrics = {name: table.x_user[:, j] for j, name in enumerate(table.columns)}
    age = np.zeros(g.n)
    for i, uid in enumerate(g.index_to_id):
        prof = profiles.get(uid)
        if prof is not None:
            age[i] = features.account_age_days(prof, v["reference_date"])
    metrics["account_age_days"] = age

    extra = []
    if v["valence"] and v["badwords"]:
        from hategraph.text import PhraseMatcher
        valence = stats.load_valence(v["valence"])
        matcher = PhraseMatcher([line for _, line in data_lines(v["badwords"])])
        sent = np.zeros(g.n)
        prof_rate = np.zeros(g.n)
        for i, uid in enumerate(g.index_to_id):
            prof = profiles.get(uid)
            if prof is not None:
                s, pr = stats.sentiment_and_profanity(prof.tweets, valence, matcher)
                sent[i] = s
                prof_rate[i] = pr
        metrics["sentiment"] = sent
        metrics["profanity"] = prof_rate
        extra = ["sentiment", "profanity"]

    categories = {}
    if v["categories"]:
        for name in sorted(os.listdir(v["categories"])):
            if name.endswith(".txt"):
                categories[name[:-4]] = stats.load_token_set(
                    os.path.join(v["categories"], name))
        for cname, words in categories.items():
            vals = np.zeros(g.n)
            for i, uid in enumerate(g.index_to_id):
                prof = profiles.get(uid)
                if prof is not None:
                    vals[i] = stats.category_occurrence(
                        prof.tweets, {cname: words})[cname]
            metrics[f"category_{cname}"] = vals
    return metrics, extra, sorted(categories)


def cmd_stats(v: dict) -> int:
    g = ingest_edges(v["edges"])
    profiles = ingest_users(v["users"])
    table = features.align_to_graph(features.read_features(v["features_file"]), g)
    label_set = read_labels(v["labels"])
    if v["suspended"]:
        read_suspended(v["suspended"], into=label_set)
    label_set.validate_against(g)
    params = provenance_params(v)
    out_dir = v["out_dir"]
    plot_dir = os.path.join(out_dir, "plotdata")
    os.makedirs(plot_dir, exist_ok=True)

    hate_idx = np.array(sorted(g.id_to_index[u] for u in label_set.hateful_ids()),
                        dtype=np.int64)
    norm_idx = np.array(sorted(g.id_to_index[u] for u in label_set.normal_ids()),
                        dtype=np.int64)
    labeled = np.concatenate([hate_idx, norm_idx])
    groups = {"hateful": hate_idx, "normal": norm_idx}
    pairs = []
    if len(hate_idx) and len(norm_idx):
        pairs.append(("hateful", "normal"))
        groups["hateful_neighbors"] = stats.neighbor_group(g, hate_idx, labeled)
        groups["normal_neighbors"] = stats.neighbor_group(g, norm_idx, labeled)
        if len(groups["hateful_neighbors"]) and len(groups["normal_neighbors"]):
            pairs.append(("hateful_neighbors", "normal_neighbors"))
    if label_set.suspended:
        susp_idx = np.array(sorted(g.id_to_index[u] for u in label_set.suspended),
                            dtype=np.int64)
        groups["suspended"] = susp_idx
        groups["active"] = np.setdiff1d(np.arange(g.n, dtype=np.int64), susp_idx)
        if len(groups["suspended"]) and len(groups["active"]):
            pairs.append(("suspended", "active"))
    if not pairs:
        raise ValidationError("no comparable groups: need both labels present")

    metrics, extra, category_names = _metric_frame(g, table, profiles, v)
    comparisons = stats.compare_groups(metrics, groups, pairs)

    def wrow(c):
        w = c.welch
        k = c.ks
        return [c.metric, c.group_a, c.group_b, c.n_a, fmt(c.mean_a),
                fmt(c.ci95_a), fmt(c.median_a), c.n_b, fmt(c.mean_b),
                fmt(c.ci95_b), fmt(c.median_b),
                fmt(w.t) if w else "", fmt(w.df) if w else "",
                fmt(w.p) if w else "", fmt(k.d) if k else "",
                fmt(k.p) if k else ""]

    write_delimited(
        os.path.join(out_dir, "report.csv"),
        ["metric", "group_a", "group_b", "n_a", "mean_a", "ci95_a", "median_a",
         "n_b", "mean_b", "ci95_b", "median_b", "welch_t", "welch_df",
         "welch_p", "ks_d", "ks_p"],
        (wrow(c) for c in comparisons), "stats", params)

    group_order = sorted(groups)
    activity = ["statuses_per_day", "followers_per_day", "followees_per_day",
                "favorites_count", "avg_tweet_interval_s"]

    def summary_rows(metric_names):
        for grp in group_order:
            idx = groups[grp]
            for m in metric_names:
                vals = metrics[m][idx]
                n = len(vals)
                mean = float(np.mean(vals)) if n else 0.0
                ci = float(1.96 * np.std(vals, ddof=1) / np.sqrt(n)) if n >= 2 else 0.0
                med = float(np.median(vals)) if n else 0.0
                yield [grp, m, n, fmt(mean), fmt(ci), fmt(med)]

    def value_rows(metric_names):
        for grp in group_order:
            for m in metric_names:
                for val in metrics[m][groups[grp]]:
                    yield [grp, m, fmt(float(val))]

    write_delimited(os.path.join(plot_dir, "activity_summary.csv"),
                    ["group", "metric", "n", "mean", "ci95", "median"],
                    summary_rows(activity), "stats", params)
    write_delimited(os.path.join(plot_dir, "creation_values.csv"),
                    ["group", "metric", "value"],
                    value_rows(["account_age_days"]), "stats", params)
    write_delimited(os.path.join(plot_dir, "spam_values.csv"),
                    ["group", "metric", "value"],
                    value_rows(["urls_per_tweet", "hashtags_per_tweet",
                                "followers_per_followee"]), "stats", params)
    write_delimited(os.path.join(plot_dir, "centrality_values.csv"),
                    ["group", "metric", "value"],
                    value_rows(["betweenness", "eigenvector", "in_degree",
                                "out_degree"]), "stats", params)
    if extra:
        write_delimited(os.path.join(plot_dir, "sentiment_values.csv"),
                        ["group", "metric", "value"],
                        value_rows(extra), "stats", params)
    if category_names:
        write_delimited(os.path.join(plot_dir, "category_summary.csv"),
                        ["group", "metric", "n", "mean", "ci95", "median"],
                        summary_rows([f"category_{c}" for c in category_names]),
                        "stats", params)

    node_type = {}
    for uid, label in label_set.labels.items():
        node_type[uid] = label
    mix = stats.mixing_table(g, node_type)
    write_delimited(
        os.path.join(plot_dir, "mixing.csv"),
        ["source_type", "dest_type", "probability", "ratio", "prevalence"],
        ([a, b, fmt(mix.prob[(a, b)]), fmt(mix.ratio[(a, b)]),
          fmt(mix.prevalence[b])]
         for a in mix.types if a not in mix.undefined for b in mix.types),
        "stats", params)

    rendered = []
    if v["render"]:
        rendered = figures.render_all(plot_dir, os.path.join(out_dir, "figures"))
    print(f"stats: {len(comparisons)} comparisons, {len(rendered)} figures "
          f"-> {out_dir}")
    return 0


def _load_eval_inputs(v):
    g = ingest_edges(v["edges"])
    table = features.align_to_graph(features.read_features(v["features_file"]), g)
    label_set = read_labels(v["labels"])
    if v["suspended"]:
        read_suspended(v["suspended"], into=label_set)
    if v["task"] == "suspended" and not label_set.suspended:
        raise ValidationError("--task suspended requires --suspended file")
    label_set.validate_against(g)
    return g, table, label_set


def cmd_train(v: dict) -> int:
    g, table, label_set = _load_eval_inputs(v)
    idx, y = evaluate.select_examples(g, label_set, v["task"], v["seed"])
    X = table.matrix(v["feature_set"])
    cw = float(np.sum(y == 0)) / float(np.sum(y == 1))
    if v["model"] == "sage":
        cfg = SageConfig(hidden=v["sage_hidden"], epochs=v["sage_epochs"],
                         class_weight=cw, seed=v["seed"])
        model = train_sage(g, X, idx, y, cfg)
    elif v["model"] == "adaboost":
        model = train_adaboost(X[idx], y, rounds=v["rounds"], class_weight=cw)
    elif v["model"] == "gbt":
        model = train_gbt(X[idx], y, n_trees=v["trees"], class_weight=cw)
    else:
        raise ValidationError(f"unknown model {v['model']!r}")
    save_model(v["out"], model)
    print(f"train: {v['model']} on {len(y)} examples ({int(np.sum(y))} positive) "
          f"-> {v['out']}")
    return 0


def cmd_evaluate(v: dict) -> int:
    for fs in v["features"]:
        if fs not in ("user+vec", "vec", "user"):
            raise ValidationError(f"unknown feature set {fs!r}")
    g, table, label_set = _load_eval_inputs(v)
    cfg = SageConfig(hidden=v["sage_hidden"], epochs=v["sage_epochs"])
    report = evaluate.run_experiment(
        g, table, label_set, v["task"], v["models"], v["features"],
        v["folds"], v["seed"], sage_config=cfg, adaboost_rounds=v["rounds"],
        gbt_trees=v["trees"])
    params = provenance_params(v)
    os.makedirs(v["out_dir"], exist_ok=True)
    evaluate.write_cv_report(os.path.join(v["out_dir"], "report.csv"),
                             report, params)
    write_json_artifact(os.path.join(v["out_dir"], "report.json"),
                        evaluate.report_to_dict(report), "evaluate", params)
    for row in report.rows:
        s = row.summary()
        print(f"evaluate: {s['model']:9s} {s['feature_set']:8s} "
              f"auc={s['auc_mean']:.4f}±{s['auc_std']:.4f} "
              f"f1={s['f1_mean']:.4f} acc={s['accuracy_mean']:.4f}")
    return 0


def cmd_synth(v: dict) -> int:
    cfg = synth.SynthConfig(
        n=v["n"], minority_fraction=v["minority_fraction"],
        homophily=v["homophily"], mean_out_degree=v["mean_out_degree"],
        degree_exponent=v["degree_exponent"], max_out_degree=v["max_out_degree"],
        vocab_size=v["vocab_size"], vocab_overlap=v["vocab_overlap"],
        tweets_per_user=v["tweets_per_user"],
        tokens_per_tweet=v["tokens_per_tweet"],
        lexicon_rate=v["lexicon_rate"], lexicon_size=v["lexicon_size"],
        activity_multiplier=v["activity_multiplier"],
        followers_multiplier=v["followers_multiplier"],
        vector_dim=v["vector_dim"], label_count=v["label_count"],
        seed=v["seed"])
    result = synth.generate(cfg)
    written = synth.write_outputs(result, v["out_dir"], provenance_params(v))
    ratio = result.truth.get("minority_in_group_ratio")
    ratio_txt = f"{ratio:.1f}" if ratio is not None else "n/a"
    print(f"synth: {cfg.n} nodes, {result.truth['edges']} edges, "
          f"in-group ratio {ratio_txt} -> {len(written)} files in {v['out_dir']}")
    return 0


_HANDLERS = {
    "ingest": cmd_ingest,
    "crawl": cmd_crawl,
    "diffuse": cmd_diffuse,
    "stratify": cmd_stratify,
    "annotate-export": cmd_annotate_export,
    "annotate-import": cmd_annotate_import,
    "features": cmd_features,
    "stats": cmd_stats,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "synth": cmd_synth,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise ValidationError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hategraph",
                     description="retweet-graph hateful-user analysis pipeline")
    parser.add_argument("--version", action="version",
                        version=f"hategraph {hategraph.__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, spec in _SPECS.items():
        p = sub.add_parser(name, help=f"{name} stage",
                           description=f"{name} stage")
        for opt in spec + _COMMON:
            if opt.parse is _bool:
                p.add_argument(f"--{opt.name}", type=_bool, default=None,
                               metavar="BOOL", help=opt.help)
            else:
                p.add_argument(f"--{opt.name}", type=opt.parse, default=None,
                               help=opt.help)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        values = resolve_options(args.command, args)
        logging.basicConfig(
            level=logging.INFO if values.get("verbose") else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s")
        return _HANDLERS[args.command](values)
    except SystemExit:
        raise
    except (ValidationError, IngestError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # anything else is a runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
