import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import er_params, symmetric_instance
from hynb.detection import (DetectOptions, detect_alg1, detect_alg2,
                            empirical_overlap_vs_theory, kmeans, overlap,
                            randomized_rounding)
from hynb.hypergraph import Hypergraph
from hynb.model import sample, symmetric_from_degree
from hynb.signal import signal_spectrum


def two_block(ratio, n, seed, d=6.0, q=3):
    mu2 = math.sqrt(ratio * d / (q - 1))
    return symmetric_instance(n, 2, q, *symmetric_from_degree(2, q, d, mu2), seed=seed)


# -- overlap ---------------------------------------------------------------

def test_overlap_identity_and_renaming():
    truth = np.array([0, 0, 1, 1, 2, 2, 2])
    assert overlap(truth, truth, 3) == 1.0
    assert overlap(truth, np.array([2, 0, 1])[truth], 3) == 1.0


def test_overlap_random_is_chance():
    rng = np.random.default_rng(0)
    truth = rng.integers(0, 3, 10 ** 4)
    pred = rng.integers(0, 3, 10 ** 4)
    assert abs(overlap(truth, pred, 3)) < 0.05


def test_overlap_hungarian_matches_bruteforce():
    rng = np.random.default_rng(1)
    truth = rng.integers(0, 7, 300)
    pred = np.where(rng.random(300) < 0.6, (truth + 3) % 7, rng.integers(0, 7, 300))
    C = np.zeros((7, 7), dtype=int)
    np.add.at(C, (truth, pred), 1)
    best = max(sum(C[i, p[i]] for i in range(7)) for p in itertools.permutations(range(7)))
    expected = (best / 300 - 1 / 7) / (1 - 1 / 7)
    # r = 7 uses the assignment solver
    assert overlap(truth, pred, 7) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2 ** 31), st.randoms(use_true_random=False))
def test_overlap_relabel_invariant(r, seed, rnd):
    rng = np.random.default_rng(seed)
    truth = rng.integers(0, r, 60)
    pred = rng.integers(0, r, 60)
    p1, p2 = list(range(r)), list(range(r))
    rnd.shuffle(p1)
    rnd.shuffle(p2)
    base = overlap(truth, pred, r)
    assert overlap(np.array(p1)[truth], np.array(p2)[pred], r) == pytest.approx(base, abs=1e-12)


def test_overlap_length_mismatch():
    with pytest.raises(ValueError):
        overlap(np.zeros(3, dtype=int), np.zeros(4, dtype=int))


# -- k-means ---------------------------------------------------------------

def test_kmeans_blobs():
    rng = np.random.default_rng(0)
    pts = np.concatenate([rng.normal(-5, 0.3, 50), rng.normal(5, 0.3, 50)])
    res = kmeans(pts, 2, seed=1)
    truth = np.repeat([0, 1], 50)
    assert overlap(truth, res.labels, 2) == 1.0
    assert not res.degenerate


def test_kmeans_identical_points():
    res = kmeans(np.ones((10, 2)), 3)
    assert res.degenerate
    with pytest.raises(ValueError):
        kmeans(np.ones((2, 1)), 3)


def test_kmeans_bruteforce_optimum():
    rng = np.random.default_rng(4)
    pts = np.concatenate([rng.normal(0, 1, (6, 2)), rng.normal(2.5, 1, (6, 2))])
    best = math.inf
    for mask in range(1, 2 ** 12 - 1):
        lab = np.array([(mask >> i) & 1 for i in range(12)])
        inertia = sum(((pts[lab == c] - pts[lab == c].mean(axis=0)) ** 2).sum() for c in (0, 1))
        best = min(best, inertia)
    assert kmeans(pts, 2, restarts=10, seed=0).inertia == pytest.approx(best, rel=1e-10)


def test_kmeans_deterministic():
    pts = np.random.default_rng(2).standard_normal((100, 3))
    a, b = kmeans(pts, 4, seed=5), kmeans(pts, 4, seed=5)
    assert np.array_equal(a.labels, b.labels)


# -- algorithms ---------------------------------------------------------------

def test_alg2_three_block_q4():
    c_in, c_out = symmetric_from_degree(3, 4, 4.0, 2.0)
    params, sigma, G = symmetric_instance(5000, 3, 4, c_in, c_out, seed=0)
    res = detect_alg2(G)
    assert res.n_informative == 3 and not res.below_threshold
    assert overlap(sigma, res.partition, 3) > 0.25
    X = res.embedding.X
    assert np.allclose((X ** 2).sum(axis=0), G.n, rtol=1e-9)


def test_alg2_er_below_threshold():
    G = sample(er_params(3000, 3, 6.0), np.zeros(3000, dtype=np.int64), seed=2)
    res = detect_alg2(G)
    assert res.below_threshold and res.n_informative == 1
    assert np.all(res.partition == 0)


def test_alg2_empty_rejected():
    with pytest.raises(ValueError):
        detect_alg2(Hypergraph(10, 3, np.empty((0, 3), dtype=int)))


def test_alg2_overlap_increases_with_signal():
    # mu2 from 1.05 to 2 times the threshold value sqrt(d/(q-1)), i.e. ratio = factor^2
    medians = []
    for factor in (1.05, 1.4, 2.0):
        vals = []
        for seed in range(10):
            _, sigma, G = two_block(factor ** 2, 2000, seed)
            vals.append(overlap(sigma, detect_alg2(G, k_hint=2, opts=DetectOptions(seed=seed)).partition, 2))
        medians.append(float(np.median(vals)))
    assert medians[0] <= medians[1] <= medians[2]
    assert medians[2] > 0.5


def test_alg2_vertex_relabel_invariant():
    _, sigma, G = two_block(3.0, 2000, 3)
    perm = np.random.default_rng(9).permutation(G.n)
    H = G.relabel(perm)
    tau = np.empty_like(sigma)
    tau[perm] = sigma
    a = overlap(sigma, detect_alg2(G, k_hint=2).partition, 2)
    b = overlap(tau, detect_alg2(H, k_hint=2).partition, 2)
    assert a == pytest.approx(b, abs=1e-12)


def test_embedding_sign_irrelevant():
    _, sigma, G = two_block(3.0, 2000, 4)
    res = detect_alg2(G, k_hint=2)
    X = res.embedding.X
    a = kmeans(X, 2, seed=0).labels
    b = kmeans(-X, 2, seed=0).labels
    assert overlap(sigma, a, 2) == overlap(sigma, b, 2)


def test_rounding_truncation():
    x = np.array([100.0] * 2000 + [0.5] * 2000)
    lab = randomized_rounding(x, K=1.0, seed=0)
    assert abs(lab[:2000].mean() - 0.5) < 0.05   # truncated entries are fair coins
    assert lab[2000:].mean() < 0.35               # P(community 0) = 0.75
    with pytest.raises(ValueError):
        detect_alg1(Hypergraph.from_edges(4, 3, [(0, 1, 2)]), K=0)


def test_alg1_huge_K_is_chance():
    _, sigma, G = two_block(3.0, 5000, 1)
    res = detect_alg1(G, K=1e9, seed=1)
    assert abs(overlap(sigma, res.partition, 2)) < 0.05


def test_alg1_feasible_K():
    hits = 0
    for seed in range(10):
        _, sigma, G = two_block(2.0, 5000, seed)
        hits += overlap(sigma, detect_alg1(G, K=2.0, seed=seed).partition, 2) > 0.1
    assert hits >= 8


@pytest.mark.xfail(strict=True, reason="with ||x||^2 = n the rounding gains at most E|x|/K <= 1/K = 0.1")
def test_alg1_K10_overlap_above_tenth():
    hits = 0
    for seed in range(10):
        _, sigma, G = two_block(2.0, 5000, seed)
        res = detect_alg1(G, K=10.0, seed=seed)
        # the bound that makes this unattainable
        assert np.abs(res.embedding.X[:, 0]).mean() <= 1.0 + 1e-9
        hits += overlap(sigma, res.partition, 2) > 0.1
    assert hits >= 8


# -- overlap against theory -------------------------------------------------------

def test_perron_overlap_matches_theory():
    params, sigma, G = symmetric_instance(4000, 4, 4, 130, 2, seed=2)
    spec = signal_spectrum(params)
    res = detect_alg2(G)
    meas, pred = empirical_overlap_vs_theory(G, spec, sigma, 0, res.report)
    assert abs(meas - pred) < 0.08


def test_overlap_grows_toward_one_q2():
    measured = []
    for tau in (0.5, 0.25, 0.08):
        d = 16.0
        mu2 = math.sqrt(d / tau)
        params, sigma, G = symmetric_instance(3000, 2, 2, *symmetric_from_degree(2, 2, d, mu2), seed=1)
        spec = signal_spectrum(params)
        rep = detect_alg2(G).report
        measured.append(empirical_overlap_vs_theory(G, spec, sigma, 1, rep)[0])
    assert measured[0] < measured[1] < measured[2]
    assert measured[2] > 0.9


def test_overlap_theory_index_error():
    params, sigma, G = symmetric_instance(500, 2, 3, 12, 4, seed=0)
    spec = signal_spectrum(params)
    rep = detect_alg2(G).report
    with pytest.raises(ValueError):
        empirical_overlap_vs_theory(G, spec, sigma, spec.r0, rep)
