"""The 2n x 2n reduction of the non-backtracking operator, the Ihara-Bass
determinant identity, the Bethe-Hessian and edge-to-vertex eigenvector
transport."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .hypergraph import Hypergraph, adjacency_matrix
from .nonbacktracking import build_B, build_P, build_S

DENSE_LIMIT = 4000


class TrivialEigenvalueError(ValueError):
    """The eigenvector has no vertex-space image (eigenvalue 1 or -(q-1))."""


@dataclass
class ReducedOperator:
    """Block matrix [[0, D - I], [-(q-1) I, A - (q-2) I]]."""

    q: int
    A: sp.csr_matrix
    deg: np.ndarray
    M: sp.csr_matrix

    @property
    def n(self) -> int:
        return len(self.deg)

    @property
    def shape(self):
        return self.M.shape

    @property
    def dtype(self):
        return self.M.dtype

    def matvec(self, x):
        n, q = self.n, self.q
        top, bot = x[:n], x[n:]
        return np.concatenate([(self.deg - 1) * bot,
                               -(q - 1) * top + self.A @ bot - (q - 2) * bot])

    def __matmul__(self, x):
        return self.M @ x


def build_tilde_B(G: Hypergraph) -> ReducedOperator:
    n, q = G.n, G.q
    A = adjacency_matrix(G).astype(float)
    deg = G.degrees().astype(float)
    eye = sp.identity(n, format="csr")
    M = sp.bmat([[None, sp.diags(deg - 1)],
                 [-(q - 1) * eye, A - (q - 2) * eye]], format="csr")
    return ReducedOperator(q, A.tocsr(), deg, M)


def bethe_hessian(G: Hypergraph, lam: float) -> sp.csr_matrix:
    """lam (q - 2 + lam) I - lam A + (q - 1)(D - I)."""
    n, q = G.n, G.q
    A = adjacency_matrix(G).astype(float)
    diag = lam * (q - 2 + lam) + (q - 1) * (G.degrees() - 1.0)
    return (sp.diags(diag) - lam * A).tocsr()


def _log_det(M: np.ndarray) -> tuple[float, float]:
    sign, logabs = np.linalg.slogdet(M)
    if not np.isfinite(logabs) or sign == 0:
        raise np.linalg.LinAlgError("singular matrix at this probe point; try another z")
    return float(logabs), cmath.phase(sign)


def _wrap(angle: float) -> float:
    return (angle + math.pi) % (2 * math.pi) - math.pi


def ihara_bass_sides(G: Hypergraph, z: complex) -> tuple[tuple[float, float], tuple[float, float]]:
    """(log|det|, phase) of det(B - zI) and of the reduced right-hand side.

    The right-hand side carries the factor (-1)^(qm) coming from
    det(-P - zI), so the two sides agree exactly.
    """
    n, q, m = G.n, G.q, G.m
    qm = q * m
    if qm > DENSE_LIMIT:
        raise ValueError(f"q*m = {qm} exceeds the dense determinant limit {DENSE_LIMIT}")
    z = complex(z)
    if abs(z - 1) < 1e-12 or abs(z + q - 1) < 1e-12:
        raise ValueError("z must avoid the trivial points 1 and -(q-1)")
    B = build_B(G).toarray().astype(complex)
    lhs = _log_det(B - z * np.eye(qm)) if qm else (0.0, 0.0)
    A = adjacency_matrix(G).toarray()
    D = np.diag(G.degrees().astype(float))
    R = (z * z + (q - 2) * z) * np.eye(n) - z * A + (q - 1) * (D - np.eye(n))
    la, pa = _log_det(R)
    e1, e2 = (q - 1) * m - n, m - n
    log_rhs = e1 * math.log(abs(z - 1)) + e2 * math.log(abs(z + q - 1)) + la
    ph_rhs = qm * math.pi + e1 * cmath.phase(z - 1) + e2 * cmath.phase(z + q - 1) + pa
    return lhs, (log_rhs, ph_rhs)


def ihara_bass_residual(G: Hypergraph, z: complex) -> float:
    """|difference of log-moduli| + |difference of phases mod 2 pi|."""
    (l1, p1), (l2, p2) = ihara_bass_sides(G, z)
    return abs(l1 - l2) + abs(_wrap(p1 - p2))


def sign_calibration(G: Hypergraph, z0: complex = 0.37 + 0.61j) -> complex:
    """det(B - z0 I) divided by the identity's right-hand side without the
    (-1)^(qm) factor; should equal (-1)^(qm)."""
    (l1, p1), (l2, p2) = ihara_bass_sides(G, z0)
    return cmath.rect(math.exp(l1 - l2), p1 - (p2 - G.num_oriented * math.pi))


def project_to_vertices(G: Hypergraph, v: np.ndarray, lam: complex,
                        rtol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Map an eigenvector of B to an eigenvector of the reduced operator.

    v_out = S v and v_in = S P^{-1} v with P^{-1} = (P - (q-2) I)/(q-1).
    """
    q = G.q
    if abs(lam - 1) < 1e-8 or abs(lam + (q - 1)) < 1e-8:
        raise TrivialEigenvalueError(f"eigenvalue {lam} is trivial")
    S = build_S(G)
    P = build_P(G)
    v = np.asarray(v)
    v_out = S @ v
    if np.linalg.norm(v_out) <= rtol * max(np.linalg.norm(v), 1e-300):
        raise TrivialEigenvalueError("eigenvalue is trivial: S v vanishes")
    v_in = S @ ((P @ v - (q - 2) * v) / (q - 1))
    return v_in, v_out


def trivial_multiplicities(G: Hypergraph, atol: float = 1e-6) -> dict:
    """Count eigenvalues of the dense B near 1 and -(q-1) via the rank of
    B - lambda I (geometric multiplicity) and by clustering the computed
    spectrum."""
    q = G.q
    B = build_B(G).toarray().astype(float)
    N = B.shape[0]
    out = {}
    w = np.linalg.eigvals(B) if N else np.empty(0)
    for name, lam in (("one", 1.0), ("minus_q1", -(q - 1.0))):
        s = np.linalg.svd(B - lam * np.eye(N), compute_uv=False) if N else np.empty(0)
        rank = int(np.sum(s > 1e-8 * max(1.0, s.max() if s.size else 1.0)))
        out[name] = {
            "geometric": N - rank,
            "clustered": int(np.sum(np.abs(w - lam) < atol)),
        }
    return out
