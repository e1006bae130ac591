"""Deterministic quantities of the block model: the two-type degree matrix,
the signal matrix Q and its eigenpairs, Kesten-Stigum ratios, gamma
coefficients, the three-index tensor Q3 and theoretical overlaps."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, validate_params


def _contract_pi(P: np.ndarray, pi: np.ndarray, times: int) -> np.ndarray:
    for _ in range(times):
        P = P @ pi
    return P


def two_type_matrix(params: ModelParams) -> np.ndarray:
    """D2[i, j] = sum over k in [r]^(q-2) of p[i, j, k] * prod(pi[k])."""
    return _contract_pi(params.tensor.dense(), params.pi, params.q - 2)


def signal_matrix(params: ModelParams) -> np.ndarray:
    return two_type_matrix(params) * params.pi[None, :]


def q3_tensor(params: ModelParams) -> np.ndarray:
    """Q3[i, j, k] = pi_j pi_k sum_l p[i, j, k, l] prod(pi[l]); zero when q = 2."""
    r, q = params.r, params.q
    if q < 3:
        return np.zeros((r, r, r))
    T = _contract_pi(params.tensor.dense(), params.pi, q - 3)
    return T * params.pi[None, :, None] * params.pi[None, None, :]


@dataclass
class SignalSpectrum:
    q: int
    d: float
    pi: np.ndarray
    Q: np.ndarray
    Q3: np.ndarray
    mu: np.ndarray
    phi: np.ndarray  # columns are eigenvectors, pi-orthonormal
    tau: np.ndarray
    r0: int
    ks_margin: np.ndarray

    @property
    def r(self) -> int:
        return len(self.mu)

    def informative(self) -> np.ndarray:
        return self.tau < 1

    def eigenspace(self, i: int, atol: float = 1e-8) -> np.ndarray:
        """Indices j with mu_j equal to mu_i (within ``atol``)."""
        return np.flatnonzero(np.abs(self.mu - self.mu[i]) <= atol * max(1.0, abs(self.mu[i])))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("i,mu,tau,informative\n")
        for i, (m, t) in enumerate(zip(self.mu, self.tau)):
            buf.write(f"{i},{m:.12g},{t:.12g},{int(t < 1)}\n")
        return buf.getvalue()


def _fix_sign(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if len(nz) and v[nz[0]] < 0:
        return -v
    return v


def signal_spectrum(params: ModelParams) -> SignalSpectrum:
    """Eigendecomposition of Q through the similar symmetric matrix
    ``Pi^{1/2} D2 Pi^{1/2}``.  Eigenvalues are sorted by decreasing modulus,
    ties by decreasing value."""
    d = validate_params(params)
    D2 = two_type_matrix(params)
    if not np.all(np.isfinite(D2)):
        raise ValueError("non-finite entries in the probability tensor")
    pi = params.pi
    sq = np.sqrt(pi)
    S = sq[:, None] * D2 * sq[None, :]
    S = (S + S.T) / 2
    w, psi = np.linalg.eigh(S)
    order = np.lexsort((-w, -np.abs(np.round(w, 12))))
    w, psi = w[order], psi[:, order]
    phi = psi / sq[:, None]
    phi = np.column_stack([_fix_sign(phi[:, i]) for i in range(len(w))])
    q = params.q
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = np.where(w != 0, d / ((q - 1) * w ** 2), np.inf)
    margin = (q - 1) * w ** 2 - d
    return SignalSpectrum(
        q=q, d=d, pi=pi.copy(), Q=D2 * pi[None, :], Q3=q3_tensor(params),
        mu=w, phi=phi, tau=tau, r0=int(np.sum(tau < 1)), ks_margin=margin,
    )


def gamma_ell(spec: SignalSpectrum, i: int, ell: int) -> tuple[float, float]:
    """Return ``(gamma_i, gamma_iU)`` at depth ``ell`` (0-based ``i``)."""
    if ell < 0:
        raise ValueError("ell must be non-negative")
    tau, mu, q, d = spec.tau[i], spec.mu[i], spec.q, spec.d
    if abs(1.0 - tau) < 1e-12:
        raise ValueError(f"tau_{i} = 1: gamma is singular at the threshold")
    c = (q - 2) / ((q - 1) * mu)
    g = (1 - tau ** (ell + 1)) / (1 - tau) + c * (1 - tau ** ell) / (1 - tau)
    gU = (d * g + (q - 2) * mu) / ((q - 1) * mu ** 2)
    return float(g), float(gU)


def gamma_limit(spec: SignalSpectrum, i: int) -> float:
    tau, mu, q = spec.tau[i], spec.mu[i], spec.q
    return float((1 + (q - 2) / ((q - 1) * mu)) / (1 - tau))


def y_vector(spec: SignalSpectrum, phi_a, phi_b) -> np.ndarray:
    """``Q (a o b) + (q-2) Q3 (a x b)`` for vectors (or column indices) a, b."""
    a = spec.phi[:, phi_a] if np.isscalar(phi_a) else np.asarray(phi_a, dtype=float)
    b = spec.phi[:, phi_b] if np.isscalar(phi_b) else np.asarray(phi_b, dtype=float)
    return spec.Q @ (a * b) + (spec.q - 2) * np.einsum("ijk,j,k->i", spec.Q3, a, b)


def theoretical_overlap(spec: SignalSpectrum, i: int) -> float:
    """Limiting overlap between the i-th reduced eigenvector and the lifted
    eigenvector of Q."""
    tau, mu, q = spec.tau[i], spec.mu[i], spec.q
    if not tau < 1:
        raise ValueError(f"eigenvalue {i} is not informative (tau={tau:.4g})")
    return float(np.sqrt((1 - tau) / (1 + (q - 2) / ((q - 1) * mu))))


def symmetric_ks_condition(r: int, q: int, c_in: float, c_out: float) -> bool:
    s = r ** (q - 1)
    return (q - 1) * (c_in - c_out) ** 2 > s * (c_in + (s - 1) * c_out)
