"""Hypergraph stochastic block model: parameters, labels and sampling.

Randomness comes from numpy's PCG64 generator.  Every random step takes an
explicit integer seed; the sampler derives one stream per type profile from
``SeedSequence([seed, profile_index])`` so output does not depend on the
order profiles are processed in.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Mapping

import numpy as np

from .hypergraph import Hypergraph

log = logging.getLogger(__name__)

DEGREE_RTOL = 1e-9


def _key(idx) -> tuple[int, ...]:
    return tuple(sorted(int(i) for i in idx))


def multisets(r: int, size: int) -> Iterator[tuple[int, ...]]:
    """Sorted multisets of ``[r]`` with ``size`` elements."""
    return itertools.combinations_with_replacement(range(r), size)


class ProbabilityTensor:
    """Symmetric order-q tensor over ``[r]``, stored by sorted index multiset."""

    def __init__(self, r: int, q: int, values: Mapping[tuple[int, ...], float]):
        if r < 1 or q < 2:
            raise ValueError(f"need r >= 1 and q >= 2, got r={r}, q={q}")
        self.r = r
        self.q = q
        self.values: dict[tuple[int, ...], float] = {}
        for idx in multisets(r, q):
            self.values[idx] = 0.0
        for idx, p in values.items():
            k = _key(idx)
            if len(k) != q or any(not 0 <= i < r for i in k):
                raise ValueError(f"bad tensor index {idx}")
            p = float(p)
            if not math.isfinite(p):
                raise ValueError(f"non-finite tensor entry at {k}")
            if p < 0:
                raise ValueError(f"negative tensor entry {p} at {k}")
            self.values[k] = p

    def __getitem__(self, idx) -> float:
        return self.values[_key(idx)]

    def dense(self) -> np.ndarray:
        """Full ``r**q`` array (fine for the small r, q used in practice)."""
        out = np.empty((self.r,) * self.q)
        for idx in itertools.product(range(self.r), repeat=self.q):
            out[idx] = self.values[_key(idx)]
        return out

    def max(self) -> float:
        return max(self.values.values())

    def permuted(self, perm) -> "ProbabilityTensor":
        """Tensor for block relabelling ``i -> perm[i]``."""
        return ProbabilityTensor(
            self.r, self.q, {tuple(perm[i] for i in k): v for k, v in self.values.items()}
        )


def symmetric_tensor(r: int, q: int, c_in: float, c_out: float) -> ProbabilityTensor:
    """``c_in`` on the diagonal multisets ``(i, ..., i)``, ``c_out`` elsewhere."""
    if r < 2 or q < 2:
        raise ValueError(f"need r >= 2 and q >= 2, got r={r}, q={q}")
    if c_in < 0 or c_out < 0:
        raise ValueError("c_in and c_out must be non-negative")
    vals = {k: (c_in if len(set(k)) == 1 else c_out) for k in multisets(r, q)}
    return ProbabilityTensor(r, q, vals)


def symmetric_from_degree(r: int, q: int, d: float, mu2: float) -> tuple[float, float]:
    """Invert ``d = c_in/r^(q-1) + (1 - 1/r^(q-1)) c_out`` and
    ``mu2 = (c_in - c_out)/r^(q-1)`` for ``(c_in, c_out)``."""
    s = r ** (q - 1)
    c_out = d - mu2
    c_in = c_out + s * mu2
    return c_in, c_out


@dataclass
class ModelParams:
    tensor: ProbabilityTensor
    pi: np.ndarray
    n: int

    def __post_init__(self):
        self.pi = np.asarray(self.pi, dtype=float)
        if self.pi.shape != (self.tensor.r,):
            raise ValueError(f"pi must have length r={self.tensor.r}")
        if np.any(self.pi <= 0):
            raise ValueError("block proportions must be positive")
        if abs(self.pi.sum() - 1.0) > 1e-12:
            raise ValueError(f"block proportions sum to {self.pi.sum()!r}, not 1")
        if self.n < self.tensor.r:
            raise ValueError("need at least one vertex per block (n >= r)")

    @property
    def r(self) -> int:
        return self.tensor.r

    @property
    def q(self) -> int:
        return self.tensor.q

    @classmethod
    def symmetric(cls, n: int, r: int, q: int, c_in: float, c_out: float) -> "ModelParams":
        return cls(symmetric_tensor(r, q, c_in, c_out), np.full(r, 1.0 / r), n)


def row_degrees(params: ModelParams) -> np.ndarray:
    """Expected degree of a vertex of each type."""
    P = params.tensor.dense()
    for _ in range(params.q - 1):
        P = P @ params.pi
    return P


def validate_params(params: ModelParams) -> float:
    """Check the equal-expected-degree condition and return the common degree d."""
    rows = row_degrees(params)
    ref = rows[0]
    scale = max(abs(ref), np.abs(rows).max(), 1e-300)
    for i in range(1, params.r):
        if abs(rows[i] - ref) > DEGREE_RTOL * scale:
            raise ValueError(
                f"expected degree differs between blocks 0 and {i}: "
                f"d_0={ref!r}, d_{i}={rows[i]!r}"
            )
    return float(rows.mean())


# -- labels --------------------------------------------------------------

def block_sizes(n: int, pi: np.ndarray) -> np.ndarray:
    """Largest-remainder rounding of ``n*pi`` to integers summing to ``n``.

    Ties in the remainder go to the lower block index.
    """
    raw = n * np.asarray(pi, dtype=float)
    base = np.floor(raw).astype(np.int64)
    short = n - int(base.sum())
    order = np.lexsort((np.arange(len(raw)), -(raw - base)))
    base[order[:short]] += 1
    return base


def assign_labels(params: ModelParams, mode: str = "deterministic", seed: int = 0) -> np.ndarray:
    """Vertex types. ``deterministic`` fixes block sizes then shuffles; ``iid``
    draws each type from ``pi``."""
    rng = np.random.default_rng(seed)
    if mode == "deterministic":
        sizes = block_sizes(params.n, params.pi)
        if np.any(sizes == 0):
            raise ValueError(f"block sizes {sizes.tolist()} leave an empty block")
        sigma = np.repeat(np.arange(params.r), sizes)
        rng.shuffle(sigma)
        return sigma
    if mode == "iid":
        return rng.choice(params.r, size=params.n, p=params.pi)
    raise ValueError(f"unknown label mode {mode!r}")


def write_labels(sigma, path) -> None:
    Path(path).write_text("".join(f"{int(s)}\n" for s in sigma))


def read_labels(path) -> np.ndarray:
    vals = [int(x) for x in Path(path).read_text().split()]
    return np.array(vals, dtype=np.int64)


# -- sampling ------------------------------------------------------------

ENUMERATE_LIMIT = 2_000


def _profiles(r: int, q: int):
    """Type-count vectors (tau_0..tau_{r-1}) summing to q, with their multiset."""
    for ms in multisets(r, q):
        tau = np.bincount(ms, minlength=r)
        yield ms, tau


def _profile_count(tau, sizes) -> int:
    return math.prod(math.comb(int(nk), int(tk)) for nk, tk in zip(sizes, tau))


def expected_edge_count(params: ModelParams, sigma) -> float:
    sizes = np.bincount(sigma, minlength=params.r)
    norm = math.comb(params.n, params.q - 1)
    return sum(
        _profile_count(tau, sizes) * min(params.tensor[ms] / norm, 1.0)
        for ms, tau in _profiles(params.r, params.q)
    )


def _enumerate_profile(members, tau):
    parts = [itertools.combinations(members[k], int(t)) for k, t in enumerate(tau) if t]
    for combo in itertools.product(*[list(p) for p in parts]):
        yield sorted(itertools.chain.from_iterable(combo))


def _sample_profile(rng, members, tau, count, total):
    if count == 0:
        return np.empty((0, int(tau.sum())), dtype=np.int64)
    if total <= ENUMERATE_LIMIT or 2 * count > total:
        allrows = np.array(list(_enumerate_profile(members, tau)), dtype=np.int64)
        pick = np.sort(rng.choice(total, size=count, replace=False))
        return allrows[pick]
    q = int(tau.sum())
    found: set[tuple[int, ...]] = set()
    while len(found) < count:
        need = count - len(found)
        batch = int(need * 1.1) + 8
        cols = []
        ok = np.ones(batch, dtype=bool)
        for k, t in enumerate(tau):
            if t == 0:
                continue
            draw = rng.integers(0, len(members[k]), size=(batch, int(t)))
            if t > 1:
                s = np.sort(draw, axis=1)
                ok &= np.all(np.diff(s, axis=1) > 0, axis=1)
            cols.append(members[k][draw])
        rows = np.sort(np.concatenate(cols, axis=1), axis=1)[ok]
        for row in map(tuple, rows.tolist()):
            if len(found) == count:
                break
            found.add(row)
    return np.array(sorted(found), dtype=np.int64).reshape(-1, q)


def sample(params: ModelParams, sigma, seed: int = 0) -> Hypergraph:
    """Draw a hypergraph: each q-subset ``e`` appears independently with
    probability ``p_{sigma(e)} / C(n, q-1)`` (clamped to 1).

    Subsets are grouped by type profile; a binomial draw fixes how many
    subsets of each profile are present and those are then chosen
    uniformly without replacement.
    """
    sigma = np.asarray(sigma, dtype=np.int64)
    if sigma.shape != (params.n,):
        raise ValueError("labels length does not match n")
    if sigma.min() < 0 or sigma.max() >= params.r:
        raise ValueError("labels outside [0, r)")
    q, r = params.q, params.r
    norm = math.comb(params.n, q - 1)
    members = [np.flatnonzero(sigma == k) for k in range(r)]
    sizes = np.array([len(mk) for mk in members])
    chunks = []
    for idx, (ms, tau) in enumerate(_profiles(r, q)):
        total = _profile_count(tau, sizes)
        p = params.tensor[ms] / norm
        if p > 1.0:
            log.warning("edge probability %.3g > 1 for profile %s clamped to 1", p, ms)
            p = 1.0
        if total == 0 or p == 0.0:
            continue
        rng = np.random.default_rng(np.random.SeedSequence([seed, idx]))
        count = int(rng.binomial(total, p))
        chunks.append(_sample_profile(rng, members, tau, count, total))
    edges = np.concatenate(chunks) if chunks else np.empty((0, q), dtype=np.int64)
    if len(edges):
        edges = edges[np.lexsort(edges.T[::-1])]
    return Hypergraph(params.n, q, edges)
