"""End-to-end acceptance checks, one per shipped guarantee.

Each test prints a single PASS line with the measured quantities (visible
under -s or on failure); the assertions enforce the stated tolerances and
runtime bounds.
"""

import json
import time

import numpy as np
import pytest

from conftest import (brute_auc, brute_betweenness, build_graph, fill_votes,
                      random_digraph)
from hategraph import crawl, diffusion, evaluate
from hategraph.centrality import (_influence_matrix, betweenness,
                                  eigenvector_centrality)
from hategraph.cli import main
from hategraph.features import build_features
from hategraph.graph import LabelSet
from hategraph.models.sage import SageConfig, gradient_check
from hategraph.stats import ks2, welch_t
from hategraph.synth import REFERENCE_DATE, SynthConfig, generate


def report(num, detail):
    print(f"criterion {num:02d} PASS: {detail}")


def strongly_connected_digraph(rng, n, extra):
    """Permutation cycle plus random chords: irreducible by construction."""
    perm = rng.permutation(n)
    src = list(perm)
    dst = list(np.roll(perm, -1))
    for _ in range(extra):
        a, b = rng.integers(n, size=2)
        if a != b:
            src.append(int(a))
            dst.append(int(b))
    return build_graph(np.array(src), np.array(dst), n)


def test_criterion_01_transition_rows_and_belief_bounds():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 201))
        g = random_digraph(rng, n, int(rng.integers(0, 3 * n)))
        T = diffusion.build_transition(g)
        sums = np.asarray(T.sum(axis=1)).ravel()
        worst = max(worst, float(np.max(np.abs(sums - 1.0))))
        p = diffusion.diffuse(T, rng.random(n), steps=3)
        assert p.min() >= 0.0 and p.max() <= 1.0
    elapsed = time.perf_counter() - t0
    assert worst < 1e-9
    assert elapsed < 10.0
    report(1, f"1000 graphs, worst row-sum error {worst:.2e}, {elapsed:.1f}s")


def test_criterion_02_consensus_on_strongly_connected_graph():
    rng = np.random.default_rng(55)
    g = strongly_connected_digraph(rng, 50, 100)
    T = diffusion.build_transition(g)
    t0 = time.perf_counter()
    p = diffusion.diffuse(T, rng.random(50), steps=500)
    elapsed = time.perf_counter() - t0
    spread = float(p.max() - p.min())
    assert spread < 1e-6
    assert elapsed < 1.0
    report(2, f"belief spread {spread:.2e} after 500 steps, {elapsed:.2f}s")


def test_criterion_03_chain_hand_oracle(chain3):
    T = diffusion.build_transition(chain3)
    p = diffusion.diffuse(T, np.array([0.0, 0.0, 1.0]), steps=2)
    assert list(p) == [0.25, 0.75, 1.0]
    report(3, "3-node chain t=2 equals (0.25, 0.75, 1) exactly")


def test_criterion_04_betweenness_matches_brute_force():
    rng = np.random.default_rng(202)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 13))
        g = random_digraph(rng, n, int(rng.integers(0, n * (n - 1))))
        delta = np.abs(betweenness(g) - brute_betweenness(g))
        worst = max(worst, float(delta.max()))
    elapsed = time.perf_counter() - t0
    assert worst < 1e-9
    assert elapsed < 30.0
    report(4, f"200 digraphs, worst |delta| {worst:.2e}, {elapsed:.1f}s")


def test_criterion_05_eigenvector_residual_and_dense_match():
    rng = np.random.default_rng(777)
    t0 = time.perf_counter()
    worst_res, worst_dense, dense_checked = 0.0, 0.0, 0
    for i in range(100):
        n = int(rng.integers(5, 21)) if i < 60 else int(rng.integers(21, 61))
        g = strongly_connected_digraph(rng, n, int(rng.integers(n, 3 * n)))
        res = eigenvector_centrality(g)
        assert res.converged
        M = _influence_matrix(g)
        resid = float(np.max(np.abs(M @ res.scores - res.eigenvalue * res.scores)))
        worst_res = max(worst_res, resid)
        if n <= 20:
            vals, vecs = np.linalg.eig(M.toarray())
            j = int(np.argmax(np.abs(vals)))
            assert abs(vals[j].imag) < 1e-10
            want = np.abs(vecs[:, j].real)
            want /= np.linalg.norm(want)
            worst_dense = max(worst_dense,
                              float(np.max(np.abs(res.scores - want))),
                              abs(res.eigenvalue - vals[j].real))
            dense_checked += 1
    elapsed = time.perf_counter() - t0
    assert worst_res < 1e-6
    assert worst_dense < 1e-6
    assert dense_checked >= 30
    assert elapsed < 10.0
    report(5, f"100 graphs, residual {worst_res:.2e}, dense gap {worst_dense:.2e} "
              f"on {dense_checked} graphs, {elapsed:.1f}s")


def test_criterion_06_auc_matches_pair_counting():
    rng = np.random.default_rng(303)
    t0 = time.perf_counter()
    for _ in range(1000):
        n = int(rng.integers(2, 201))
        y = rng.integers(0, 2, size=n)
        if y.min() == y.max():
            y[0] = 1 - y[0]
        scores = rng.random(n)
        if rng.random() < 0.5:
            scores = np.round(scores, 1)   # force ties
        assert evaluate.auc_score(scores, y) == brute_auc(scores, y)
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0
    report(6, f"1000 instances exactly equal, {elapsed:.1f}s")


def test_criterion_07_welch_and_ks_fixed_examples():
    w = welch_t(np.array([1.0, 2.0, 3.0]), np.array([2.0, 3.0, 4.0]))
    assert abs(w.t - (-1.224744871391589)) < 1e-9
    assert w.df == pytest.approx(4.0, abs=1e-12)
    assert 0.0 < w.p < 1.0
    ks = ks2(np.array([1.0, 2.0, 3.0, 4.0]), np.array([3.0, 4.0, 5.0, 6.0]))
    assert ks.d == 0.5
    same = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    w0 = welch_t(same, same.copy())
    assert w0.t == 0.0 and w0.p == 1.0
    ks0 = ks2(same, same.copy())
    assert ks0.d == 0.0 and ks0.p == 1.0
    report(7, f"t={w.t:.6f} df={w.df:.0f}, D={ks.d}, null cases p=1/D=0")


def test_criterion_08_sage_gradient_check():
    rng = np.random.default_rng(12345)
    g = random_digraph(rng, 10, 30)
    X = rng.normal(size=(10, 4))
    y = (X[:8, 0] > 0).astype(np.int64)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    t0 = time.perf_counter()
    err = gradient_check(g, X, np.arange(8), y,
                         SageConfig(hidden=6, sample_l1=4, sample_l2=3,
                                    batch_size=4, seed=1))
    elapsed = time.perf_counter() - t0
    assert err < 1e-4
    assert elapsed < 5.0
    report(8, f"max relative gradient error {err:.2e}, {elapsed:.2f}s")


def test_criterion_09_planted_minority_in_group_ratio():
    t0 = time.perf_counter()
    ratios = []
    for seed in range(5):
        cfg = SynthConfig(n=50000, minority_fraction=0.006, homophily=0.415,
                          tweets_per_user=1, tokens_per_tweet=1, vocab_size=10,
                          lexicon_size=5, vector_dim=2, seed=seed)
        ratios.append(generate(cfg).truth["minority_in_group_ratio"])
    elapsed = time.perf_counter() - t0
    mean = float(np.mean(ratios))
    target = 0.415 / 0.006
    assert abs(mean - target) <= 0.2 * target
    assert elapsed < 60.0
    report(9, f"mean in-group ratio {mean:.1f} (target {target:.1f} +/-20%), "
              f"{elapsed:.1f}s")


def planted_graph(lexicon_rate=0.0):
    cfg = SynthConfig(n=5000, minority_fraction=0.05, homophily=0.7,
                      vocab_overlap=0.9, lexicon_rate=lexicon_rate,
                      vector_dim=16, tweets_per_user=10, tokens_per_tweet=8,
                      vocab_size=300, seed=0)
    return cfg, generate(cfg)


def test_criterion_10_detection_ordering_on_planted_graph():
    t0 = time.perf_counter()
    cfg, res = planted_graph()
    table = build_features(res.graph, res.profiles, res.vectors,
                           cfg.vector_dim, REFERENCE_DATE)
    minority = set(res.minority_ids)
    labels = LabelSet(labels={u: "hateful" if u in minority else "normal"
                              for u in res.graph.index_to_id})
    assert len(labels.labels) == 5000
    results = []
    for seed in (0, 1):
        rep = evaluate.run_experiment(
            res.graph, table, labels, "hateful",
            models=("sage", "adaboost"), feature_sets=("user+vec",),
            k=5, seed=seed, sage_config=SageConfig(hidden=64, epochs=8))
        auc = {row.model: row.summary()["auc_mean"] for row in rep.rows}
        assert auc["sage"] >= 0.90
        assert auc["sage"] - auc["adaboost"] >= 0.03
        results.append(auc)
    elapsed = time.perf_counter() - t0
    assert elapsed < 600.0
    detail = "; ".join(f"seed {s}: sage {a['sage']:.3f} vs adaboost "
                       f"{a['adaboost']:.3f}" for s, a in zip((0, 1), results))
    report(10, f"{detail}; {elapsed:.0f}s")


def test_criterion_11_top_stratum_enrichment():
    t0 = time.perf_counter()
    cfg, res = planted_graph(lexicon_rate=0.3)
    p0 = diffusion.seed_beliefs(res.graph, res.profiles, res.lexicon)
    p = diffusion.diffuse(diffusion.build_transition(res.graph), p0, steps=2)
    strata = 1 + np.searchsorted(np.asarray(diffusion.DEFAULT_BOUNDS), p,
                                 side="right")
    minority = set(res.minority_ids)
    is_min = np.array([uid in minority for uid in res.graph.index_to_id])
    top = strata == 4
    assert top.sum() > 0
    enrichment = float(is_min[top].mean()) / cfg.minority_fraction
    elapsed = time.perf_counter() - t0
    assert enrichment >= 5.0
    assert elapsed < 60.0
    report(11, f"stratum [.75,1]: {int(top.sum())} users, "
               f"{enrichment:.1f}x prevalence, {elapsed:.1f}s")


def test_criterion_12_durw_outdegree_estimate():
    t0 = time.perf_counter()
    cfg = SynthConfig(n=10000, minority_fraction=0.05, homophily=0.5,
                      degree_exponent=3.0, mean_out_degree=3.0,
                      max_out_degree=100, tweets_per_user=1,
                      tokens_per_tweet=1, vocab_size=10, lexicon_size=5,
                      vector_dim=2, seed=0)
    g = generate(cfg).graph
    oracle = crawl.FileOracle(g)
    degs = g.out_degrees()
    true = {int(k): float(c) / g.n
            for k, c in zip(*np.unique(degs, return_counts=True))}
    tvs = []
    for seed in range(10):
        _, record = crawl.durw_sample(oracle, budget=1000, seed=seed)
        est = crawl.estimate_outdegree_dist(record)
        keys = set(true) | set(est)
        tvs.append(0.5 * sum(abs(true.get(k, 0.0) - est.get(k, 0.0))
                             for k in keys))
    elapsed = time.perf_counter() - t0
    mean_tv = float(np.mean(tvs))
    assert mean_tv <= 0.05
    assert elapsed < 60.0
    report(12, f"mean TV {mean_tv:.4f} over 10 seeds at 10% budget, "
               f"{elapsed:.1f}s")


def rerun_identical(argv, out_paths, tmp_path):
    """Run a stage twice with the same argv; outputs must not change."""
    assert main(argv) == 0
    before = {p: p.read_bytes() for p in out_paths}
    assert before, argv
    assert main(argv) == 0
    after = {p: p.read_bytes() for p in out_paths}
    assert before == after, argv[0]


def all_files(directory):
    return sorted(p for p in directory.rglob("*") if p.is_file())


def test_criterion_13_stage_reruns_are_byte_identical(tmp_path):
    d = tmp_path
    synth_args = ["synth", "--n", "200", "--minority-fraction", "0.1",
                  "--homophily", "0.5", "--tweets-per-user", "3",
                  "--tokens-per-tweet", "6", "--vocab-size", "50",
                  "--vector-dim", "4", "--lexicon-rate", "1.0", "--seed", "9",
                  "--out-dir", str(d / "synth")]
    assert main(synth_args) == 0
    rerun_identical(synth_args, all_files(d / "synth"), d)
    truth = json.loads((d / "synth" / "truth.json").read_text())
    edges = str(d / "synth" / "edges.tsv")
    users = str(d / "synth" / "users.jsonl")
    hateful = {line.split(",")[0]
               for line in (d / "synth" / "labels.csv").read_text().splitlines()
               if line.endswith(",hateful")}

    rerun_identical(["ingest", "--edges", edges, "--users", users,
                     "--out", str(d / "summary.json")],
                    [d / "summary.json"], d)
    crawl_args = ["crawl", "--edges", edges, "--budget", "40",
                  "--out-dir", str(d / "crawl")]
    assert main(crawl_args) == 0
    rerun_identical(crawl_args, all_files(d / "crawl"), d)

    rerun_identical(["diffuse", "--edges", edges, "--users", users,
                     "--lexicon", str(d / "synth" / "lexicon.txt"),
                     "--out", str(d / "beliefs.csv")], [d / "beliefs.csv"], d)
    rerun_identical(["stratify", "--beliefs", str(d / "beliefs.csv"),
                     "--cap", "40", "--out", str(d / "strata.csv")],
                    [d / "strata.csv"], d)
    rerun_identical(["annotate-export", "--strata", str(d / "strata.csv"),
                     "--users", users, "--out", str(d / "annotation.csv")],
                    [d / "annotation.csv"], d)
    fill_votes(d / "annotation.csv", d / "filled.csv", hateful)
    rerun_identical(["annotate-import", "--annotations", str(d / "filled.csv"),
                     "--edges", edges, "--out", str(d / "labels.csv")],
                    [d / "labels.csv"], d)
    rerun_identical(["features", "--edges", edges, "--users", users,
                     "--vectors", str(d / "synth" / "vectors.txt"),
                     "--reference-date", truth["reference_date"],
                     "--out", str(d / "features.csv")], [d / "features.csv"], d)

    stats_args = ["stats", "--edges", edges, "--users", users,
                  "--features-file", str(d / "features.csv"),
                  "--labels", str(d / "synth" / "labels.csv"),
                  "--suspended", str(d / "synth" / "suspended.csv"),
                  "--reference-date", truth["reference_date"],
                  "--render", "true", "--out-dir", str(d / "stats")]
    assert main(stats_args) == 0
    stats_files = all_files(d / "stats")
    assert any(p.suffix == ".png" for p in stats_files)
    rerun_identical(stats_args, stats_files, d)

    rerun_identical(["train", "--edges", edges,
                     "--features-file", str(d / "features.csv"),
                     "--labels", str(d / "synth" / "labels.csv"),
                     "--model", "gbt", "--trees", "20",
                     "--out", str(d / "model.json")], [d / "model.json"], d)
    eval_args = ["evaluate", "--edges", edges,
                 "--features-file", str(d / "features.csv"),
                 "--labels", str(d / "synth" / "labels.csv"),
                 "--models", "sage,adaboost,gbt", "--features", "user+vec",
                 "--folds", "3", "--rounds", "10", "--trees", "10",
                 "--sage-epochs", "2", "--sage-hidden", "8",
                 "--out-dir", str(d / "eval")]
    assert main(eval_args) == 0
    rerun_identical(eval_args, all_files(d / "eval"), d)
    report(13, "all 11 stages byte-identical on rerun (figures included)")
