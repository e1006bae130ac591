import cmath
import math

import numpy as np
import pytest
import scipy.sparse as sp

from conftest import symmetric_instance
from hynb.hypergraph import Hypergraph, adjacency_matrix
from hynb.ihara_bass import (DENSE_LIMIT, TrivialEigenvalueError, bethe_hessian,
                             build_tilde_B, ihara_bass_residual, ihara_bass_sides,
                             project_to_vertices, sign_calibration, trivial_multiplicities)
from hynb.nonbacktracking import build_B, build_P


def small(q, n=40, d=3.0, seed=0):
    s = 2 ** (q - 1)
    return symmetric_instance(n, 2, q, d / 2 * (s - 1) + d, d / 2, seed=seed)[2]


def nontrivial(vals, q, tol=1e-5):
    keep = (np.abs(vals - 1) > tol) & (np.abs(vals + q - 1) > tol)
    return vals[keep]


def test_empty_reduced_operator():
    G = Hypergraph(3, 4, np.empty((0, 4), dtype=int))
    M = build_tilde_B(G).M.toarray()
    I = np.eye(3)
    assert np.array_equal(M, np.block([[0 * I, -I], [-3 * I, -2 * I]]))


def test_q2_reduced_operator():
    G = Hypergraph.from_edges(4, 2, [(0, 1), (1, 2), (1, 3)])
    A = adjacency_matrix(G).toarray()
    D = np.diag(G.degrees())
    I = np.eye(4)
    M = build_tilde_B(G).M.toarray()
    assert np.array_equal(M, np.block([[0 * I, D - I], [-I, A]]))


def test_matvec_matches_matrix():
    G = small(3, n=60)
    Bt = build_tilde_B(G)
    x = np.random.default_rng(0).standard_normal(2 * G.n)
    assert np.allclose(Bt.matvec(x), Bt.M @ x)


@pytest.mark.parametrize("q", [2, 3, 4])
def test_spectra_agree_off_trivial(q):
    G = small(q, n=40, seed=q)
    wb = nontrivial(np.linalg.eigvals(build_B(G).toarray().astype(float)), q)
    wt = nontrivial(np.linalg.eigvals(build_tilde_B(G).M.toarray()), q)
    assert len(wb) == len(wt)
    remaining = list(wt)
    for z in wb:
        j = int(np.argmin(np.abs(np.array(remaining) - z)))
        assert abs(remaining[j] - z) < 1e-6
        remaining.pop(j)


@pytest.mark.parametrize("q", [2, 3, 4])
def test_ihara_bass_residual(q):
    G = small(q, n=30, seed=10 + q)
    rng = np.random.default_rng(q)
    for _ in range(10):
        z = complex(*rng.normal(0, 2, size=2))
        assert ihara_bass_residual(G, z) < 1e-6


def test_classical_bass_q2():
    G = small(2, n=30, seed=3)
    n, m = G.n, G.m
    A = adjacency_matrix(G).toarray()
    D = np.diag(G.degrees())
    for z in [0.3 + 0.7j, -1.4 + 0.2j, 2.5 - 1.1j]:
        lhs = np.linalg.det(build_B(G).toarray() - z * np.eye(2 * m))
        rhs = (z * z - 1) ** (m - n) * np.linalg.det(z * z * np.eye(n) - z * A + D - np.eye(n))
        assert abs(lhs - rhs) < 1e-8 * abs(lhs)


@pytest.mark.parametrize("q", [2, 3, 4, 5])
def test_single_edge_magnitudes(q):
    G = Hypergraph.from_edges(q, q, [tuple(range(q))])
    for z in [0.4 + 1.3j, -2.2 + 0.5j]:
        (l1, p1), (l2, p2) = ihara_bass_sides(G, z)
        assert l1 == pytest.approx(q * math.log(abs(z)))
        assert l2 == pytest.approx(q * math.log(abs(z)))
        assert sign_calibration(G, z) == pytest.approx((-1) ** q)


def test_sign_calibration_instances():
    for q in (2, 3, 4):
        G = small(q, n=25, seed=q)
        assert sign_calibration(G) == pytest.approx((-1) ** (q * G.m), abs=1e-8)


def test_residual_guards():
    G = small(3, n=20)
    with pytest.raises(ValueError):
        ihara_bass_residual(G, 1.0)
    with pytest.raises(ValueError):
        ihara_bass_residual(G, -2.0)
    big = symmetric_instance(3000, 2, 3, 12, 4)[2]
    assert big.num_oriented > DENSE_LIMIT
    with pytest.raises(ValueError):
        ihara_bass_residual(big, 0.5j)


def test_bethe_hessian_basics():
    G = small(3, n=30)
    D = np.diag(G.degrees().astype(float))
    H0 = bethe_hessian(G, 0.0).toarray()
    assert np.allclose(H0, 2 * (D - np.eye(G.n)))
    H = bethe_hessian(G, 1.7)
    assert (H != H.T).nnz == 0
    Gq2 = small(2, n=30)
    A = adjacency_matrix(Gq2).toarray()
    D2 = np.diag(Gq2.degrees().astype(float))
    lam = -0.8
    assert np.allclose(bethe_hessian(Gq2, lam).toarray(),
                       lam ** 2 * np.eye(30) - lam * A + D2 - np.eye(30))


def test_bethe_hessian_kernel():
    params, sigma, G = symmetric_instance(300, 2, 3, 20, 2, seed=5)
    w, V = np.linalg.eig(build_tilde_B(G).M.toarray())
    real = np.flatnonzero(np.abs(w.imag) < 1e-10)
    real = real[np.argsort(-np.abs(w[real]))][:5]
    for k in real:
        lam, x_out = w[k].real, V[G.n:, k].real
        if np.linalg.norm(x_out) < 1e-8:
            continue
        assert np.linalg.norm(bethe_hessian(G, lam) @ x_out) < 1e-6 * np.linalg.norm(x_out)


def test_project_to_vertices_eigenpairs():
    G = small(3, n=35, d=3.5, seed=8)
    Bt = build_tilde_B(G).M.toarray()
    w, V = np.linalg.eig(build_B(G).toarray().astype(float))
    checked = 0
    for k in range(len(w)):
        lam = w[k]
        if abs(lam - 1) < 1e-4 or abs(lam + 2) < 1e-4:
            continue
        v_in, v_out = project_to_vertices(G, V[:, k], lam)
        x = np.concatenate([v_in, v_out])
        assert np.linalg.norm(Bt @ x - lam * x) < 1e-8 * max(1.0, np.linalg.norm(x))
        checked += 1
    assert checked > 10


def test_project_q2_incoming_sum():
    G = Hypergraph.from_edges(4, 2, [(0, 1), (1, 2), (1, 3), (2, 3)])
    v = np.arange(1, 2 * G.m + 1, dtype=float)
    v_in, v_out = project_to_vertices(G, v, 2.5)
    expected = np.zeros(4)
    for e, (a, b) in enumerate(G.edges):
        expected[a] += v[2 * e + 1]   # message b -> {a, b}
        expected[b] += v[2 * e]
    assert np.allclose(v_in, expected)


def test_project_trivial_errors():
    G = small(3, n=20, d=4.0, seed=2)
    assert (G.q - 1) * G.m > G.n
    B = build_B(G).toarray().astype(float)
    _, s, Vt = np.linalg.svd(B - np.eye(len(B)))
    v = Vt[-1]
    with pytest.raises(TrivialEigenvalueError):
        project_to_vertices(G, v, 1.0)
    # a vector in the kernel of S with a non-trivial eigenvalue guess
    Sv = np.zeros(G.num_oriented)
    Sv[0], Sv[G.q] = 1.0, 0.0
    e0 = G.edges[0]
    k = next(f for f in range(1, G.m) if e0[0] in G.edges[f])
    pos = list(G.edges[k]).index(e0[0])
    Sv[k * G.q + pos] = -1.0
    with pytest.raises(TrivialEigenvalueError):
        project_to_vertices(G, Sv, 3.3)


def test_P_inverse_exact():
    for q in (2, 3, 5):
        G = small(q, n=20, seed=q)
        P = build_P(G)
        I = sp.identity(P.shape[0], dtype=np.int64)
        assert ((P - (q - 2) * I) @ P - (q - 1) * I).nnz == 0


def _corrected(G):
    A = adjacency_matrix(G).toarray().astype(float)
    D = np.diag(G.degrees().astype(float))
    n, m, q = G.n, G.m, G.q
    null1 = n - np.linalg.matrix_rank((q - 1) * D - A)
    null2 = n - np.linalg.matrix_rank(D + A)
    return (q - 1) * m - n + null1, m - n + null2


@pytest.mark.parametrize("q,seed", [(2, 0), (3, 1), (3, 2), (4, 3)])
def test_trivial_multiplicities(q, seed):
    G = next(H for k in range(100) if (H := small(q, n=24, d=q + 1.5, seed=100 * seed + k)).m >= H.n)
    mult = trivial_multiplicities(G)
    one, minus = _corrected(G)
    assert mult["one"]["geometric"] >= (q - 1) * G.m - G.n
    assert mult["minus_q1"]["geometric"] >= G.m - G.n
    assert mult["one"]["geometric"] == one
    assert mult["minus_q1"]["geometric"] == minus
