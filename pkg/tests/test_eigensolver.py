import numpy as np
import pytest
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from conftest import er_params, symmetric_instance
from hynb.eigensolver import bulk_radius, dense_spectrum, outside_bulk, topk
from hynb.ihara_bass import build_tilde_B
from hynb.model import sample


def random_sparse(seed, N=300, density=0.05):
    rng = np.random.default_rng(seed)
    return sp.random(N, N, density=density, random_state=rng,
                     data_rvs=rng.standard_normal, format="csr")


def match_top(vals, ref, k):
    """Max distance from each of the top-k values to the reference set."""
    return max(np.min(np.abs(ref[: k + 4] - v)) for v in vals[:k])


def test_dense_examples():
    assert np.allclose(dense_spectrum(np.diag([3.0, 1.0, -2.0])), [3, -2, 1])
    w = dense_spectrum(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    assert np.allclose(sorted(w, key=lambda z: z.imag), [-1j, 1j])
    C = np.array([[0, 0, 1.0], [1, 0, 0], [0, 1, 0]])  # companion of z^3 - 1
    w = dense_spectrum(C)
    roots = np.exp(2j * np.pi * np.arange(3) / 3)
    assert max(np.min(np.abs(roots - z)) for z in w) < 1e-10


def test_dense_with_vectors_and_empty():
    M = np.random.default_rng(0).standard_normal((20, 20))
    w, V = dense_spectrum(M, vectors=True)
    assert np.allclose(M @ V, V * w)
    assert np.all(np.diff(np.abs(w)) <= 1e-12)
    assert len(dense_spectrum(np.zeros((0, 0)))) == 0
    with pytest.raises(ValueError):
        dense_spectrum(np.zeros((2, 3)))


@pytest.mark.parametrize("seed", range(5))
def test_topk_matches_dense(seed):
    M = random_sparse(seed)
    rep = topk(M, 5, seed=seed)
    assert rep.converged
    ref = dense_spectrum(M.toarray())
    assert match_top(rep.ritz_values, ref, 5) < 1e-6


def test_topk_residuals_certified():
    M = random_sparse(11)
    rep = topk(M, 6, tol=1e-9)
    scale = max(1.0, abs(rep.ritz_values[0]))
    for c, lam in enumerate(rep.ritz_values):
        x = rep.vectors[:, c]
        res = np.linalg.norm(M @ x - lam * x) / np.linalg.norm(x)
        assert res == pytest.approx(rep.residuals[c], rel=1e-6, abs=1e-14)
        assert rep.residuals[c] < 1e-9 * scale * 10


def test_topk_conjugate_pairs():
    M = random_sparse(3)
    rep = topk(M, 8)
    w = rep.ritz_values
    for i, z in enumerate(w):
        if abs(z.imag) > 1e-8:
            j = int(np.argmin(np.abs(w - np.conj(z))))
            assert abs(w[j] - np.conj(z)) < 1e-8
            assert rep.residuals[j] <= 10 * rep.residuals[i] + 1e-12


def test_topk_seed_determinism():
    M = random_sparse(5)
    a, b = topk(M, 5, seed=7), topk(M, 5, seed=7)
    assert np.array_equal(a.ritz_values, b.ritz_values)


def test_topk_power_iteration():
    rng = np.random.default_rng(2)
    X = rng.random((200, 200))
    M = X + X.T
    x = np.ones(200)
    for _ in range(500):
        x = M @ x
        x /= np.linalg.norm(x)
    rep = topk(M, 1)
    assert rep.ritz_values[0].real == pytest.approx(x @ M @ x, rel=1e-10)


def test_topk_linear_operator_and_fallback():
    M = random_sparse(9, N=150)
    op = LinearOperator(M.shape, matvec=lambda v: M @ v, dtype=float)
    rep = topk(op, 4)
    assert match_top(rep.ritz_values, dense_spectrum(M.toarray()), 4) < 1e-6
    small = np.diag(np.arange(10.0))
    rep = topk(small, 3)
    assert np.allclose(rep.ritz_values, [9, 8, 7]) and rep.converged


def test_topk_partial_report():
    M = random_sparse(4, N=500, density=0.02)
    rep = topk(M, 6, tol=1e-14, max_restarts=0)
    assert not rep.converged
    assert len(rep.ritz_values) >= 6


def test_topk_argument_errors():
    M = random_sparse(1)
    with pytest.raises(ValueError):
        topk(M, 0)
    with pytest.raises(ValueError):
        topk(M, 10, subspace_dim=15)


def test_er_ramanujan_single_seed():
    p = er_params(2000, 3, 6.0)
    G = sample(p, np.zeros(2000, dtype=np.int64), seed=0)
    rep = topk(build_tilde_B(G).M, 4)
    lam = rep.ritz_values
    assert abs(lam[0] - 12) < 0.6
    assert abs(lam[1]) <= 1.15 * np.sqrt(12)


def test_below_threshold_one_informative():
    # q=3, r=2, d=6, (q-1) mu^2 / d = 0.5
    mu2 = np.sqrt(0.5 * 6 / 2)
    _, _, G = symmetric_instance(3000, 2, 3, 6 - mu2 + 4 * mu2, 6 - mu2, seed=1)
    rep = topk(build_tilde_B(G).M, 8)
    assert len(outside_bulk(rep, 3, G.mean_degree(), 0.1)) == 1


def test_outside_bulk_margin_and_trivial():
    from hynb.eigensolver import EigenReport
    vals = np.array([12.0, 6.0, 1.0, -3.0, 2.0 + 1j, 0.1])
    rep = EigenReport(vals, None, np.zeros(6), np.zeros(6), True)
    assert outside_bulk(rep, 4, 4.0, margin=-1) == [0, 1, 4, 5]
    assert outside_bulk(rep, 4, 4.0, margin=0.1) == [0, 1]
    assert rep.bulk_radius == pytest.approx(bulk_radius(4, 4.0)) == pytest.approx(np.sqrt(12))
