"""Spectral community detection on the reduced operator, k-means and
overlap scoring."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .eigensolver import EigenReport, bulk_radius, outside_bulk, topk
from .hypergraph import Hypergraph
from .ihara_bass import build_tilde_B
from .signal import SignalSpectrum, theoretical_overlap

log = logging.getLogger(__name__)

IMAG_RTOL = 1e-6
BULK_EXEMPT = 0.95


@dataclass
class DetectOptions:
    margin: float = 0.1
    tol: float = 1e-8
    max_restarts: int = 500
    subspace_dim: Optional[int] = None
    k_eigs: int = 8
    seed: int = 0
    kmeans_restarts: int = 10
    kmeans_iters: int = 100


@dataclass
class Embedding:
    X: np.ndarray  # n x k, columns scaled to squared norm n
    eigenvalues: np.ndarray


@dataclass
class DetectionResult:
    partition: np.ndarray
    embedding: Embedding
    report: EigenReport
    below_threshold: bool
    n_informative: int
    warnings: list = field(default_factory=list)


def reduced_spectrum(G: Hypergraph, opts: DetectOptions) -> EigenReport:
    """Leading eigenpairs of the reduced operator, enlarging the request
    until at least one returned value lies inside the bulk."""
    Bt = build_tilde_B(G)
    k = opts.k_eigs
    dbar = G.mean_degree()
    # bulk values cluster in modulus and converge slowly; only values near or
    # beyond the outlier threshold have to meet the tolerance
    exempt = BULK_EXEMPT * (1 + opts.margin) * bulk_radius(G.q, dbar)
    while True:
        rep = topk(Bt.M, k, tol=opts.tol, max_restarts=opts.max_restarts,
                   subspace_dim=opts.subspace_dim, seed=opts.seed, exempt_below=exempt)
        info = outside_bulk(rep, G.q, dbar, opts.margin)
        if len(info) < len(rep) or len(rep) >= Bt.shape[0] - 2:
            return rep
        k *= 2


def _real_vertex_part(vec: np.ndarray, n: int) -> Optional[np.ndarray]:
    """Last n entries with the global phase removed; None if not real."""
    x = vec[n:]
    j = int(np.argmax(np.abs(x)))
    if abs(x[j]) == 0:
        return None
    x = x * (abs(x[j]) / x[j])
    if np.linalg.norm(x.imag) > IMAG_RTOL * np.linalg.norm(x):
        return None
    return x.real


def _normalize(x: np.ndarray) -> np.ndarray:
    return x * math.sqrt(len(x)) / np.linalg.norm(x)


def embedding_from_report(G: Hypergraph, rep: EigenReport, idx) -> tuple[Embedding, list]:
    cols, vals, warns = [], [], []
    for i in idx:
        lam = rep.ritz_values[i]
        if abs(lam.imag) > IMAG_RTOL * abs(lam):
            warns.append(f"eigenvalue {lam:.4g} is not real; skipped")
            continue
        x = _real_vertex_part(rep.vectors[:, i], G.n)
        if x is None:
            warns.append(f"eigenvector for {lam:.4g} is not real; skipped")
            continue
        cols.append(_normalize(x))
        vals.append(lam.real)
    X = np.column_stack(cols) if cols else np.empty((G.n, 0))
    return Embedding(X, np.array(vals)), warns


def detect_alg2(G: Hypergraph, k_hint: Optional[int] = None,
                opts: Optional[DetectOptions] = None) -> DetectionResult:
    """Eigenvectors outside the bulk, restricted to vertex space and
    clustered with k-means."""
    opts = opts or DetectOptions()
    if G.m == 0:
        raise ValueError("hypergraph has no hyperedges")
    rep = reduced_spectrum(G, opts)
    info = rep.informative
    emb, warns = embedding_from_report(G, rep, info)
    for w in warns:
        log.warning(w)
    if len(info) <= 1:
        return DetectionResult(np.zeros(G.n, dtype=np.int64), emb, rep, True, len(info), warns)
    k = k_hint or len(info)
    part = kmeans(emb.X, k, restarts=opts.kmeans_restarts, iters=opts.kmeans_iters,
                  seed=opts.seed).labels
    return DetectionResult(part, emb, rep, False, len(info), warns)


def detect_alg1(G: Hypergraph, K: float = 10.0, seed: int = 0,
                opts: Optional[DetectOptions] = None) -> DetectionResult:
    """Two-way randomized rounding of the second reduced eigenvector:
    P(v in community 1) = 1/2 + x(v) 1{|x(v)| <= K} / (2K)."""
    if K <= 0:
        raise ValueError("K must be positive")
    opts = opts or DetectOptions()
    rep = reduced_spectrum(G, opts)
    info = rep.informative
    emb, warns = embedding_from_report(G, rep, [1])
    if emb.X.shape[1] == 0:
        raise ValueError("second eigenvector is not real")
    x = emb.X[:, 0]
    return DetectionResult(randomized_rounding(x, K, seed), emb, rep,
                           len(info) <= 1, len(info), warns)


def randomized_rounding(x: np.ndarray, K: float, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    prob = 0.5 + x * (np.abs(x) <= K) / (2 * K)
    return np.where(rng.random(len(x)) < prob, 0, 1).astype(np.int64)


# -- k-means ---------------------------------------------------------------

@dataclass
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    degenerate: bool


def _kmeanspp(X, k, rng):
    n = len(X)
    centers = [X[rng.integers(n)]]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers.append(X[rng.integers(n)])
        else:
            centers.append(X[rng.choice(n, p=d2 / total)])
        d2 = np.minimum(d2, np.sum((X - centers[-1]) ** 2, axis=1))
    return np.array(centers)


def _assign(X, C):
    dist = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
    lab = np.argmin(dist, axis=1)
    return lab, float(dist[np.arange(len(X)), lab].sum())


def kmeans(points, k: int, restarts: int = 10, iters: int = 100, seed: int = 0) -> KMeansResult:
    """Lloyd iterations from k-means++ seeds, best inertia over restarts."""
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = len(X)
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    distinct = len(np.unique(X, axis=0))
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        C = _kmeanspp(X, k, rng)
        lab, inertia = _assign(X, C)
        for _ in range(iters):
            newC = C.copy()
            for c in range(k):
                mask = lab == c
                if mask.any():
                    newC[c] = X[mask].mean(axis=0)
            lab2, inertia = _assign(X, newC)
            C = newC
            if np.array_equal(lab2, lab):
                break
            lab = lab2
        if best is None or inertia < best.inertia:
            best = KMeansResult(lab, C, inertia, False)
    best.degenerate = distinct < k or len(np.unique(best.labels)) < k
    return best


# -- scoring ---------------------------------------------------------------

def overlap(truth, pred, r: Optional[int] = None) -> float:
    """Chance-corrected agreement maximized over block relabellings:
    (accuracy - 1/r) / (1 - 1/r)."""
    truth = np.asarray(truth, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    if truth.shape != pred.shape:
        raise ValueError("partitions differ in length")
    r = r or int(truth.max()) + 1
    k = max(r, int(pred.max()) + 1)
    C = np.zeros((k, k), dtype=np.int64)
    np.add.at(C, (truth, pred), 1)
    if k <= 6:
        agree = max(sum(C[i, p[i]] for i in range(k)) for p in itertools.permutations(range(k)))
    else:
        rows, cols = linear_sum_assignment(-C)
        agree = int(C[rows, cols].sum())
    acc = agree / len(truth)
    return (acc - 1 / r) / (1 - 1 / r)


def lifted_basis(spec: SignalSpectrum, sigma, i: int) -> np.ndarray:
    """Orthonormal basis of the vertex-space lift of the mu_i eigenspace."""
    cols = spec.phi[np.asarray(sigma)][:, spec.eigenspace(i)]
    Qm, _ = np.linalg.qr(cols)
    return Qm


def empirical_overlap_vs_theory(G: Hypergraph, spec: SignalSpectrum, sigma, i: int,
                                rep: EigenReport) -> tuple[float, float]:
    """(measured, predicted) overlap for the i-th (0-based) reduced
    eigenvector.  The measured value is the best inner product with a unit
    lifted eigenvector of the same eigenvalue of Q."""
    if i >= spec.r0:
        raise ValueError(f"index {i} is not informative (r0={spec.r0})")
    u = _real_vertex_part(rep.vectors[:, i], G.n)
    if u is None:
        raise ValueError(f"reduced eigenvector {i} is not real")
    u = u / np.linalg.norm(u)
    basis = lifted_basis(spec, sigma, i)
    measured = float(np.linalg.norm(basis.T @ u))
    return measured, theoretical_overlap(spec, i)
