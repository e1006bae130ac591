"""Leading eigenpairs of real non-symmetric operators.

``topk`` is a restarted Arnoldi method in Krylov-Schur form: after each
expansion the Hessenberg matrix is brought to real Schur form, the wanted
(largest modulus) Ritz values are moved to the leading block and the rest
are discarded.  This is the exact-shift implicit restart written in a way
that keeps complex conjugate pairs together without complex arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import aslinearoperator

TRIVIAL_ATOL = 1e-6


class ConvergenceError(RuntimeError):
    pass


@dataclass
class EigenReport:
    ritz_values: np.ndarray
    vectors: Optional[np.ndarray]
    residuals: np.ndarray
    residual_estimates: np.ndarray
    converged: bool
    restarts: int = 0
    matvecs: int = 0
    bulk_radius: Optional[float] = None
    informative: list = field(default_factory=list)

    def __len__(self):
        return len(self.ritz_values)


def _modulus_order(vals: np.ndarray) -> np.ndarray:
    """Sort by decreasing modulus, then real part, then imaginary part."""
    return np.lexsort((-vals.imag, -vals.real, -np.round(np.abs(vals), 12)))


def dense_spectrum(M, vectors: bool = False):
    """All eigenvalues of a dense real matrix (LAPACK Hessenberg + shifted QR),
    sorted by decreasing modulus."""
    M = np.asarray(M.toarray() if hasattr(M, "toarray") else M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("square matrix required")
    if M.shape[0] == 0:
        return (np.empty(0, complex), np.empty((0, 0), complex)) if vectors else np.empty(0, complex)
    try:
        if vectors:
            w, v = sla.eig(M)
        else:
            w = sla.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"dense eigensolver failed: {exc}") from exc
    order = _modulus_order(w)
    if vectors:
        return w[order], v[:, order]
    return w[order]


def _orthogonalize(V, w, j):
    """Two passes of classical Gram-Schmidt against V[:, :j]."""
    Vj = V[:, :j]
    h = Vj.T @ w
    w = w - Vj @ h
    h2 = Vj.T @ w
    w = w - Vj @ h2
    return w, h + h2


def topk(M, k: int, tol: float = 1e-8, max_restarts: int = 500,
         subspace_dim: Optional[int] = None, seed: int = 0,
         return_vectors: bool = True, exempt_below: float = 0.0) -> EigenReport:
    """``k`` eigenvalues of largest modulus of a real operator ``M``.

    ``M`` may be a dense array, a sparse matrix or a ``LinearOperator``.
    A pair is converged when its residual ``||M x - t x|| / ||x||`` is below
    ``tol * max(1, |t_1|)``.  Residuals in the report are recomputed with a
    fresh matvec.  Returns a partial report with ``converged=False`` when
    ``max_restarts`` is exhausted.
    """
    op = aslinearoperator(M)
    N = op.shape[0]
    if k < 1:
        raise ValueError("k must be positive")
    if N == 0:
        return EigenReport(np.empty(0, complex), np.empty((0, 0), complex),
                           np.empty(0), np.empty(0), True)
    if k >= N - 1 or N <= 64:
        return _dense_fallback(op, N, k, return_vectors)
    p = subspace_dim or max(2 * k + 10, 32)
    if p < 2 * k + 2:
        raise ValueError("subspace_dim must be at least 2k+2")
    p = min(p, N - 1)

    rng = np.random.default_rng(seed)
    V = np.zeros((N, p + 1))
    H = np.zeros((p + 1, p))
    v0 = rng.standard_normal(N)
    V[:, 0] = v0 / np.linalg.norm(v0)
    start = 0
    matvecs = 0
    restarts = 0
    keep_target = k + (p - k) // 2
    converged = False
    while True:
        for j in range(start, p):
            w = op.matvec(V[:, j])
            matvecs += 1
            w, h = _orthogonalize(V, w, j + 1)
            H[: j + 1, j] = h
            beta = np.linalg.norm(w)
            if beta <= 1e-12 * max(1.0, np.abs(h).max()):
                # invariant subspace: continue with a fresh orthogonal direction
                w = rng.standard_normal(N)
                w, _ = _orthogonalize(V, w, j + 1)
                V[:, j + 1] = w / np.linalg.norm(w)
                H[j + 1, j] = 0.0
            else:
                V[:, j + 1] = w / beta
                H[j + 1, j] = beta

        Hp = H[:p, :p]
        evals = np.linalg.eigvals(Hp)
        mods = np.sort(np.abs(evals))[::-1]
        thr = mods[min(keep_target, p) - 1]
        slack = 1e-10 * max(mods[0], 1e-300)
        T, Z, sdim = sla.schur(Hp, output="real",
                               sort=lambda re, im: math.hypot(re, im) >= thr - slack)
        b = H[p, p - 1] * Z[p - 1, :]

        # Ritz pairs of the leading block
        theta, S = np.linalg.eig(T[:sdim, :sdim])
        order = _modulus_order(theta)
        theta, S = theta[order], S[:, order]
        S = S / np.linalg.norm(S, axis=0)
        est = np.abs(b[:sdim] @ S)
        kk = _extend_conjugates(theta, k)
        scale = max(1.0, abs(theta[0]))
        need = np.abs(theta[:kk]) >= exempt_below
        if np.all(est[:kk][need] <= tol * scale):
            converged = True
        if converged or restarts >= max_restarts:
            break

        keep = sdim
        if keep >= p:
            keep = p - 1
            if abs(T[keep, keep - 1]) > 0:  # do not split a 2x2 block
                keep -= 1
        V[:, :keep] = V[:, :p] @ Z[:, :keep]
        V[:, keep] = V[:, p]
        H[:] = 0.0
        H[:keep, :keep] = T[:keep, :keep]
        H[keep, :keep] = b[:keep]
        start = keep
        restarts += 1

    kk = _extend_conjugates(theta, k)
    theta, S, est = theta[:kk], S[:, :kk], est[:kk]
    X = V[:, :p] @ (Z[:, :sdim] @ S)
    res = _residuals(op, X, theta)
    return EigenReport(theta, X if return_vectors else None, res, est, converged,
                       restarts=restarts, matvecs=matvecs)


def _extend_conjugates(theta, k):
    """Grow ``k`` by one if it would split a complex conjugate pair."""
    k = min(k, len(theta))
    if k < len(theta) and abs(theta[k - 1].imag) > 0:
        if np.isclose(theta[k], np.conj(theta[k - 1]), rtol=1e-8, atol=1e-12):
            return k + 1
    return k


def _residuals(op, X, theta):
    out = np.empty(len(theta))
    for c in range(len(theta)):
        x = X[:, c]
        if np.iscomplexobj(x):
            Ax = op.matvec(x.real) + 1j * op.matvec(x.imag)
        else:
            Ax = op.matvec(x)
        out[c] = np.linalg.norm(Ax - theta[c] * x) / np.linalg.norm(x)
    return out


def _dense_fallback(op, N, k, return_vectors):
    M = op.matmat(np.eye(N))
    w, v = dense_spectrum(M, vectors=True)
    k = _extend_conjugates(w, k)
    w, v = w[:k], v[:, :k]
    res = _residuals(op, v, w)
    return EigenReport(w, v if return_vectors else None, res, res.copy(), True)


def bulk_radius(q: int, dbar: float) -> float:
    return math.sqrt((q - 1) * dbar)


def outside_bulk(report: EigenReport, q: int, dbar: float, margin: float = 0.1) -> list[int]:
    """Indices of Ritz values with modulus above ``(1+margin) sqrt((q-1) dbar)``,
    skipping the trivial eigenvalues 1 and -(q-1)."""
    radius = bulk_radius(q, dbar)
    report.bulk_radius = radius
    out = []
    for i, lam in enumerate(report.ritz_values):
        if abs(lam - 1) < TRIVIAL_ATOL or abs(lam + (q - 1)) < TRIVIAL_ATOL:
            continue
        if abs(lam) > (1 + margin) * radius:
            out.append(i)
    report.informative = out
    return out
