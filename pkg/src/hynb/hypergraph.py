"""q-uniform hypergraphs, incidence structure, balls and tangle-freeness."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
import scipy.sparse as sp

UNREACHABLE = -1


@dataclass(frozen=True, eq=False)
class Hypergraph:
    """Immutable q-uniform hypergraph on vertices ``0..n-1``.

    ``edges`` is an ``(m, q)`` integer array; every row is strictly
    increasing and rows are sorted lexicographically without duplicates.
    Use :meth:`from_edges` to build one from arbitrary vertex tuples.
    """

    n: int
    q: int
    edges: np.ndarray
    _incidence: sp.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"vertex count must be positive, got {self.n}")
        if self.q < 2:
            raise ValueError(f"uniformity must be >= 2, got {self.q}")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, self.q)
        if edges.size:
            if edges.min() < 0 or edges.max() >= self.n:
                raise ValueError("hyperedge vertex out of range [0, n)")
            if np.any(np.diff(edges, axis=1) <= 0):
                raise ValueError("hyperedges must be strictly increasing tuples")
            keys = edges.tolist()
            for a, b in zip(keys, keys[1:]):
                if a == b:
                    raise ValueError(f"duplicate hyperedge {tuple(a)}")
                if a > b:
                    raise ValueError("hyperedges must be sorted lexicographically")
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        m = edges.shape[0]
        inc = sp.csr_matrix(
            (np.ones(m * self.q, dtype=np.int64),
             (edges.ravel(), np.repeat(np.arange(m), self.q))),
            shape=(self.n, m),
        )
        object.__setattr__(self, "_incidence", inc)

    @classmethod
    def from_edges(cls, n: int, q: int, edges: Iterable[Iterable[int]]) -> "Hypergraph":
        """Canonicalize vertex tuples (sort within and across edges).

        Repeated vertices inside an edge and duplicate edges are rejected.
        """
        rows = []
        for e in edges:
            t = tuple(sorted(int(v) for v in e))
            if len(t) != q:
                raise ValueError(f"hyperedge {t} does not have {q} vertices")
            if len(set(t)) != q:
                raise ValueError(f"hyperedge {t} repeats a vertex")
            rows.append(t)
        rows.sort()
        for a, b in zip(rows, rows[1:]):
            if a == b:
                raise ValueError(f"duplicate hyperedge {a}")
        arr = np.array(rows, dtype=np.int64).reshape(-1, q)
        return cls(n, q, arr)

    @property
    def m(self) -> int:
        return int(self.edges.shape[0])

    @property
    def num_oriented(self) -> int:
        return self.q * self.m

    def incidence(self) -> sp.csr_matrix:
        """Vertex-by-edge 0/1 incidence matrix (n x m)."""
        return self._incidence

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n).astype(np.int64)

    def vertex_edges(self, v: int) -> np.ndarray:
        inc = self._incidence
        return inc.indices[inc.indptr[v]:inc.indptr[v + 1]]

    def mean_degree(self) -> float:
        return self.q * self.m / self.n

    def relabel(self, perm: np.ndarray) -> "Hypergraph":
        """Return the hypergraph with vertex ``v`` renamed ``perm[v]``."""
        perm = np.asarray(perm)
        return Hypergraph.from_edges(self.n, self.q, perm[self.edges].tolist())

    def __eq__(self, other):
        if not isinstance(other, Hypergraph):
            return NotImplemented
        return (self.n, self.q) == (other.n, other.q) and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.n, self.q, self.edges.tobytes()))


class OrientedEdgeIndex:
    """Bijection between oriented hyperedges ``(v, e)`` and ``[0, q*m)``.

    Ids are edge-major: edge ``e`` owns ids ``e*q .. e*q+q-1`` in the
    order its vertices are stored.
    """

    def __init__(self, G: Hypergraph):
        self.G = G
        self.vertex = G.edges.ravel().copy()
        self.edge = np.repeat(np.arange(G.m, dtype=np.int64), G.q)

    def __len__(self):
        return self.G.num_oriented

    def index(self, v: int, e: int) -> int:
        row = self.G.edges[e]
        pos = int(np.searchsorted(row, v))
        if pos >= self.G.q or row[pos] != v:
            raise KeyError(f"vertex {v} is not in hyperedge {e}")
        return e * self.G.q + pos

    def pair(self, idx: int) -> tuple[int, int]:
        return int(self.vertex[idx]), int(self.edge[idx])


@dataclass
class Ball:
    root: int
    radius: int
    vertices: frozenset
    edges: frozenset
    distances: dict


def adjacency_matrix(G: Hypergraph) -> sp.csr_matrix:
    """A_ij = number of hyperedges containing both i and j (zero diagonal)."""
    N = G.incidence()
    A = (N @ N.T).tocsr()
    A.setdiag(0)
    A.eliminate_zeros()
    return A.astype(np.int64)


def degree_matrix(G: Hypergraph) -> sp.dia_matrix:
    return sp.diags(G.degrees(), format="csr", dtype=np.int64)


def distances_from(G: Hypergraph, v: int, t: Optional[int] = None) -> np.ndarray:
    """Hop distances from ``v``; unreachable (or beyond ``t``) is ``UNREACHABLE``."""
    dist = np.full(G.n, UNREACHABLE, dtype=np.int64)
    dist[v] = 0
    seen_edges = np.zeros(G.m, dtype=bool)
    frontier = [v]
    k = 0
    while frontier and (t is None or k < t):
        nxt = []
        for u in frontier:
            for e in G.vertex_edges(u):
                if seen_edges[e]:
                    continue
                seen_edges[e] = True
                for w in G.edges[e]:
                    if dist[w] == UNREACHABLE:
                        dist[w] = k + 1
                        nxt.append(int(w))
        frontier = nxt
        k += 1
    return dist


def ball(G: Hypergraph, v: int, t: int) -> Ball:
    """Radius-``t`` neighbourhood of ``v``: vertices within ``t`` hops and the
    hyperedges traversed from vertices at distance ``< t``."""
    if not 0 <= v < G.n:
        raise ValueError(f"vertex {v} out of range")
    if t < 0:
        raise ValueError("radius must be non-negative")
    dist = {v: 0}
    edges: set[int] = set()
    queue = deque([v])
    while queue:
        u = queue.popleft()
        if dist[u] >= t:
            continue
        for e in G.vertex_edges(u):
            e = int(e)
            if e in edges:
                continue
            edges.add(e)
            for w in G.edges[e]:
                w = int(w)
                if w not in dist:
                    dist[w] = dist[u] + 1
                    queue.append(w)
    return Ball(v, t, frozenset(dist), frozenset(edges), dist)


def cycle_excess(G: Hypergraph, b: Ball) -> int:
    """Independent cycle count of the vertex/edge factor graph of a ball.

    A ball is connected, so excess = incidences - vertices - edges + 1.
    """
    incidences = G.q * len(b.edges)
    return incidences - len(b.vertices) - len(b.edges) + 1


def is_tangle_free(G: Hypergraph, ell: int) -> tuple[bool, Optional[int]]:
    """Check that every radius-``ell`` ball contains at most one cycle.

    Returns ``(True, None)`` or ``(False, witness_vertex)``.
    """
    if ell < 0:
        raise ValueError("radius must be non-negative")
    for v in range(G.n):
        if cycle_excess(G, ball(G, v, ell)) > 1:
            return False, v
    return True, None


def ball_is_tangle_free(G: Hypergraph, v: int, ell: int) -> bool:
    return cycle_excess(G, ball(G, v, ell)) <= 1


# -- text format ---------------------------------------------------------

def write_hypergraph(G: Hypergraph, path) -> None:
    lines = [f"{G.n} {G.q} {G.m}"]
    lines.extend(" ".join(str(int(v)) for v in row) for row in G.edges)
    Path(path).write_text("\n".join(lines) + "\n")


def parse_hypergraph(text: str) -> Hypergraph:
    rows = [ln.strip() for ln in text.splitlines()]
    rows = [ln for ln in rows if ln and not ln.startswith("#")]
    if not rows:
        raise ValueError("empty hypergraph file")
    header = rows[0].split()
    if len(header) != 3:
        raise ValueError(f"bad header line {rows[0]!r}, expected 'n q m'")
    n, q, m = (int(x) for x in header)
    body = rows[1:]
    if len(body) != m:
        raise ValueError(f"header declares {m} hyperedges, found {len(body)}")
    edges = []
    for ln in body:
        vs = [int(x) for x in ln.split()]
        if len(vs) != q:
            raise ValueError(f"line {ln!r} does not have {q} vertices")
        edges.append(vs)
    arr = np.array(edges, dtype=np.int64).reshape(-1, q)
    # the constructor enforces increasing rows and lexicographic order
    return Hypergraph(n, q, arr)


def read_hypergraph(path) -> Hypergraph:
    return parse_hypergraph(Path(path).read_text())
