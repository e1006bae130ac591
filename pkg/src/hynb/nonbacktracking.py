"""Non-backtracking operator B on oriented hyperedges, the edge reversal
operator P, the start/terminal matrices S and T, and pseudo-eigenvectors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .hypergraph import Hypergraph, adjacency_matrix, degree_matrix
from .signal import SignalSpectrum, gamma_ell


class IdentityError(AssertionError):
    """An exact algebraic identity failed."""


def build_S(G: Hypergraph) -> sp.csr_matrix:
    """S[i, (j->e)] = 1 iff i == j  (n x qm)."""
    qm = G.num_oriented
    return sp.csr_matrix(
        (np.ones(qm, dtype=np.int64), (G.edges.ravel(), np.arange(qm))),
        shape=(G.n, qm),
    )


def build_P(G: Hypergraph) -> sp.csr_matrix:
    """P[(u->e), (v->f)] = 1 iff e == f and u != v: one (J - I) block per edge."""
    q = G.q
    block = np.ones((q, q), dtype=np.int64) - np.eye(q, dtype=np.int64)
    return sp.block_diag([sp.csr_matrix(block)] * G.m, format="csr", dtype=np.int64) \
        if G.m else sp.csr_matrix((0, 0), dtype=np.int64)


def build_T(G: Hypergraph) -> sp.csr_matrix:
    """T[i, (j->e)] = 1 iff i in e and i != j."""
    q, m = G.q, G.m
    rows = np.repeat(G.edges, q, axis=0).reshape(m, q, q)  # [e, pos_j, pos_i] -> vertex i
    cols = np.broadcast_to(np.arange(m * q).reshape(m, q, 1), (m, q, q))
    keep = ~np.eye(q, dtype=bool)[None, :, :]
    keep = np.broadcast_to(keep, (m, q, q))
    return sp.csr_matrix(
        (np.ones(int(keep.sum()), dtype=np.int64), (rows[keep], cols[keep])),
        shape=(G.n, m * q),
    )


def build_B(G: Hypergraph) -> sp.csr_matrix:
    """B[(u->e), (v->f)] = 1 iff v in e minus u, v in f and f != e.

    Assembled as P K where K joins the oriented edges of a vertex that sit
    on different hyperedges.
    """
    if G.m == 0:
        return sp.csr_matrix((0, 0), dtype=np.int64)
    S = build_S(G)
    K = (S.T @ S).tocsr()
    K.setdiag(0)
    K.eliminate_zeros()
    B = (build_P(G) @ K).tocsr()
    B.sort_indices()
    return B


class NBOperator:
    """Sparse non-backtracking operator with forward and adjoint matvecs."""

    def __init__(self, G: Hypergraph):
        self.G = G
        self.B = build_B(G)
        self.BT = self.B.T.tocsr()
        self._P: Optional[sp.csr_matrix] = None
        self._S: Optional[sp.csr_matrix] = None

    @property
    def dim(self) -> int:
        return self.G.num_oriented

    @property
    def P(self) -> sp.csr_matrix:
        if self._P is None:
            self._P = build_P(self.G)
        return self._P

    @property
    def S(self) -> sp.csr_matrix:
        if self._S is None:
            self._S = build_S(self.G)
        return self._S

    def apply(self, x: np.ndarray, ell: int = 1, mode: str = "forward") -> np.ndarray:
        return nb_apply(self, x, ell, mode)


def nb_apply(op: NBOperator, x: np.ndarray, ell: int, mode: str = "forward",
             scale: float = 1.0) -> np.ndarray:
    """B^ell x (``forward``) or (B*)^ell x (``adjoint``), one sparse matvec at
    a time, dividing by ``scale`` after each step."""
    if ell < 0:
        raise ValueError("ell must be non-negative")
    if mode not in ("forward", "adjoint"):
        raise ValueError(f"unknown mode {mode!r}")
    M = op.B if mode == "forward" else op.BT
    y = np.asarray(x)
    if len(y) != op.dim:
        raise ValueError(f"vector length {len(y)} != {op.dim}")
    for _ in range(ell):
        y = M @ y
        if scale != 1.0:
            y = y / scale
    return y


def _max_dev(X) -> int:
    X = sp.csr_matrix(X)
    X.eliminate_zeros()
    return int(abs(X).max()) if X.nnz else 0


def verify_identities(G: Hypergraph, k_max: int = 5, probes: int = 10, seed: int = 0,
                      raise_on_failure: bool = True) -> dict[str, int]:
    """Exact integer check of the B, P, S, T, A, D identities.

    Returns the maximum absolute deviation for each identity; all must be 0.
    """
    if k_max > 8:
        raise ValueError("k_max is limited to 8")
    q = G.q
    A = adjacency_matrix(G)
    D = degree_matrix(G)
    S, T, P = build_S(G), build_T(G), build_P(G)
    B = build_B(G)
    I_e = sp.identity(G.num_oriented, dtype=np.int64, format="csr")
    report = {
        "P^2 = (q-2)P + (q-1)I": _max_dev(P @ P - (q - 2) * P - (q - 1) * I_e),
        "SS* = D": _max_dev(S @ S.T - D),
        "TT* = (q-2)A + (q-1)D": _max_dev(T @ T.T - (q - 2) * A - (q - 1) * D),
        "ST* = A": _max_dev(S @ T.T - A),
        "SP = T": _max_dev(S @ P - T),
        "T*S = B + P": _max_dev(T.T @ S - B - P),
    }
    rng = np.random.default_rng(seed)
    BT = B.T.tocsr()
    X = rng.integers(-3, 4, size=(G.num_oriented, probes)).astype(np.int64)
    left = P @ X
    right = X
    for k in range(1, k_max + 1):
        left = B @ left          # B^k P x
        right = BT @ right       # (B*)^k x
        dev = np.abs(left - P @ right)
        report[f"B^{k} P = P (B*)^{k}"] = int(dev.max()) if dev.size else 0
    if raise_on_failure:
        bad = {k: v for k, v in report.items() if v != 0}
        if bad:
            raise IdentityError(f"identity violated: {bad}")
    return report


def lift_chi(phi: np.ndarray, sigma: np.ndarray, G: Hypergraph) -> np.ndarray:
    """chi(v->e) = phi(sigma(v)) on the oriented edge space."""
    sigma = np.asarray(sigma)
    if sigma.shape != (G.n,):
        raise ValueError("labels length does not match the hypergraph")
    return np.asarray(phi)[sigma[G.edges.ravel()]]


def default_ell(n: int, q: int, d: float) -> int:
    """Depth with ((q-1)d)^ell close to sqrt(n), at least 1."""
    growth = (q - 1) * d
    if growth <= 1:
        return 1
    return max(1, int(math.floor(math.log(n) / (2 * math.log(growth)))))


@dataclass
class PseudoEigenvectors:
    U: np.ndarray
    V: np.ndarray
    ell: int
    index: np.ndarray  # which eigenpairs of Q the columns correspond to


def pseudo_eigenvectors(G: Hypergraph, spec: SignalSpectrum, sigma, ell: int,
                        op: Optional[NBOperator] = None) -> PseudoEigenvectors:
    """Columns u_i = B^ell P chi_i / ([(q-1)mu_i]^(ell+1) sqrt n) and
    v_i = (B*)^ell chi_i / ([(q-1)mu_i]^ell sqrt n) for informative i."""
    if spec.r0 < 1:
        raise ValueError("no informative eigenvalue")
    if ell < 1:
        raise ValueError("ell must be at least 1")
    op = op or NBOperator(G)
    idx = np.arange(spec.r0)
    sq = math.sqrt(G.n)
    U = np.empty((op.dim, spec.r0))
    V = np.empty((op.dim, spec.r0))
    for c, i in enumerate(idx):
        chi = lift_chi(spec.phi[:, i], sigma, G).astype(float)
        theta = (G.q - 1) * spec.mu[i]
        U[:, c] = nb_apply(op, op.P @ chi / theta, ell, "forward", scale=theta) / sq
        V[:, c] = nb_apply(op, chi, ell, "adjoint", scale=theta) / sq
    return PseudoEigenvectors(U, V, ell, idx)


def gram_diagnostics(pe: PseudoEigenvectors, op: NBOperator, spec: SignalSpectrum) -> dict:
    """Spectral-norm deviations of the four Gram relations of the
    pseudo-eigenvectors from their limits."""
    U, V, ell = pe.U, pe.V, pe.ell
    g = np.array([gamma_ell(spec, i, ell) for i in pe.index])
    theta = (spec.q - 1) * spec.mu[pe.index]
    BlU = np.column_stack([nb_apply(op, U[:, c], ell) for c in range(U.shape[1])])
    mats = {
        "dev1": U.T @ U - np.diag(g[:, 1]),
        "dev2": V.T @ V - np.diag(spec.d * g[:, 0]),
        "dev3": U.T @ V - np.eye(len(pe.index)),
        "dev4": V.T @ BlU - np.diag(theta ** ell),
    }
    out = {k: float(np.linalg.norm(M, 2)) for k, M in mats.items()}
    out["UtV"] = U.T @ V
    return out
