"""Galton-Watson hypertrees, tree functionals and their martingales, Monte
Carlo moment checks, and the non-backtracking path functional h."""

from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .hypergraph import Hypergraph, ball_is_tangle_free
from .model import ModelParams, multisets, validate_params
from .signal import SignalSpectrum, gamma_ell, signal_spectrum, y_vector


class NodeCapExceeded(RuntimeError):
    def __init__(self, msg, generations):
        super().__init__(msg)
        self.generations = generations


@dataclass
class ChildLaw:
    """Law of the (q-1) child types of one hyperedge, per parent type,
    grouped by type profile."""

    profiles: list          # sorted multisets of size q-1
    counts: np.ndarray      # profile x r matrix of type counts
    probs: np.ndarray       # r x profile probabilities


def child_law(params: ModelParams, d: Optional[float] = None) -> ChildLaw:
    """P(child tuple = j | parent type k) = p[k, j] prod(pi[j]) / d, summed over
    the orderings of each profile."""
    d = validate_params(params) if d is None else d
    r, q, pi = params.r, params.q, params.pi
    profs = list(multisets(r, q - 1))
    counts = np.array([np.bincount(p, minlength=r) for p in profs]).reshape(len(profs), r)
    probs = np.zeros((r, len(profs)))
    for a, prof in enumerate(profs):
        orderings = math.factorial(q - 1) / math.prod(math.factorial(int(c)) for c in counts[a])
        weight = orderings * math.prod(pi[j] for j in prof)
        for k in range(r):
            probs[k, a] = params.tensor[(k,) + prof] * weight
    if d > 0:
        probs /= d
        sums = probs.sum(axis=1)
        if np.any(np.abs(sums - 1) > 1e-12):
            raise ValueError(f"child-type probabilities do not sum to 1: {sums}")
    return ChildLaw(profs, counts, probs)


@dataclass
class GWTree:
    types: np.ndarray
    depth: np.ndarray
    parent_edge: np.ndarray
    edges: list  # (parent node, tuple of child nodes)
    max_depth: int
    q: int

    @property
    def size(self) -> int:
        return len(self.types)

    def generation(self, t: int) -> np.ndarray:
        return np.flatnonzero(self.depth == t)


def sample_tree(params: ModelParams, root_type: int, depth: int, node_cap: int = 10 ** 6,
                seed: int = 0, law: Optional[ChildLaw] = None) -> GWTree:
    """Breadth-first Galton-Watson hypertree down to ``depth``."""
    if depth < 0 or node_cap < 1:
        raise ValueError("need depth >= 0 and node_cap >= 1")
    d = validate_params(params)
    law = law or child_law(params, d)
    rng = np.random.default_rng(seed)
    types = [int(root_type)]
    dep = [0]
    parent_edge = [-1]
    edges = []
    frontier = [0]
    gens = [1]
    for t in range(depth):
        nxt = []
        for node in frontier:
            k = types[node]
            n_edges = rng.poisson(d) if d > 0 else 0
            for _ in range(n_edges):
                a = rng.choice(len(law.profiles), p=law.probs[k])
                tup = list(law.profiles[a])
                rng.shuffle(tup)
                kids = []
                for ct in tup:
                    types.append(int(ct))
                    dep.append(t + 1)
                    parent_edge.append(len(edges))
                    kids.append(len(types) - 1)
                edges.append((node, tuple(kids)))
                nxt.extend(kids)
            if len(types) > node_cap:
                gens.append(len(nxt))
                raise NodeCapExceeded(
                    f"node cap {node_cap} exceeded at depth {t + 1}", gens)
        gens.append(len(nxt))
        frontier = nxt
    return GWTree(np.array(types), np.array(dep), np.array(parent_edge), edges, depth, params.q)


def tree_functional(tree: GWTree, xi, t: int) -> float:
    """Sum of xi over the types of depth-t nodes."""
    if t > tree.max_depth:
        raise ValueError(f"t={t} exceeds generated depth {tree.max_depth}")
    xi = np.asarray(xi, dtype=float)
    return float(xi[tree.types[tree.depth == t]].sum())


def martingale_path(tree: GWTree, spec: SignalSpectrum, i: int, T: int) -> np.ndarray:
    """Z_t = [(q-1) mu_i]^(-t) f_{phi_i, t} for t = 0..T."""
    mu = spec.mu[i]
    if mu == 0:
        raise ValueError("mu_i = 0: the martingale is undefined")
    theta = (spec.q - 1) * mu
    return np.array([tree_functional(tree, spec.phi[:, i], t) / theta ** t
                     for t in range(T + 1)])


def tree_to_hypergraph(tree: GWTree) -> Hypergraph:
    return Hypergraph.from_edges(tree.size, tree.q,
                                 [(p,) + kids for p, kids in tree.edges])


# -- vectorized generation counts -------------------------------------------

def generation_counts(params: ModelParams, root_type: int, depth: int, trials: int,
                      seed: int = 0, law: Optional[ChildLaw] = None) -> np.ndarray:
    """Per-trial type counts of every generation, shape (trials, depth+1, r).

    Uses that a node of type k spawns Poisson(d) hyperedges with i.i.d.
    child profiles, so the generation-(t+1) profile counts given generation
    t are multinomial with Poisson(d * N_k) trials.
    """
    d = validate_params(params)
    law = law or child_law(params, d)
    r = params.r
    rng = np.random.default_rng(seed)
    out = np.zeros((trials, depth + 1, r), dtype=np.int64)
    out[:, 0, root_type] = 1
    for t in range(depth):
        cur = out[:, t, :]
        nxt = np.zeros((trials, r), dtype=np.int64)
        for k in range(r):
            n_edges = rng.poisson(d * cur[:, k]) if d > 0 else np.zeros(trials, dtype=np.int64)
            prof = rng.multinomial(n_edges, law.probs[k])
            nxt += prof @ law.counts
        out[:, t + 1, :] = nxt
    return out


# -- moment checks -------------------------------------------------------------

@dataclass
class MomentRow:
    kind: str
    i: int
    j: int
    t: int
    t2: int
    root_type: int
    mc_mean: float
    stderr: float
    theory: float

    @property
    def z(self) -> float:
        diff = self.mc_mean - self.theory
        if self.stderr == 0:
            return 0.0 if abs(diff) <= 1e-9 * max(1.0, abs(self.theory)) else math.inf
        return diff / self.stderr


@dataclass
class MomentReport:
    rows: list = field(default_factory=list)
    trials: int = 0
    discarded: int = 0
    notes: dict = field(default_factory=dict)

    def max_abs_z(self) -> float:
        return max((abs(r.z) for r in self.rows), default=0.0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("kind,i,j,t,t2,root_type,mc_mean,stderr,theory,z\n")
        for r in self.rows:
            buf.write(f"{r.kind},{r.i},{r.j},{r.t},{r.t2},{r.root_type},"
                      f"{r.mc_mean:.10g},{r.stderr:.6g},{r.theory:.10g},{r.z:.4f}\n")
        return buf.getvalue()


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    m, sd = float(x.mean()), float(x.std(ddof=1))
    if sd <= 1e-12 * max(1.0, abs(m)):  # deterministic up to rounding
        sd = 0.0
    return m, sd / math.sqrt(len(x))


def theory_cross_moment(spec: SignalSpectrum, i: int, j: int, t: int) -> np.ndarray:
    """Per-root-type E[f_{phi_i,t} f_{phi_j,t}]."""
    q, mi, mj = spec.q, spec.mu[i], spec.mu[j]
    y = y_vector(spec, i, j)
    acc = spec.phi[:, i] * spec.phi[:, j]
    Qs = y.copy()
    for s in range(t):
        acc = acc + Qs / ((q - 1) * mi * mj) ** (s + 1)
        Qs = spec.Q @ Qs
    return ((q - 1) ** 2 * mi * mj) ** t * acc


def theory_increment_square(spec: SignalSpectrum, i: int, t: int) -> np.ndarray:
    """Per-root-type E[(f_{t+1} - (q-1) mu f_t)^2] = (q-1)^(t+1) Q^t y."""
    y = y_vector(spec, i, i)
    return (spec.q - 1) ** (t + 1) * np.linalg.matrix_power(spec.Q, t) @ y


def theory_increment_square_via_martingale(spec: SignalSpectrum, i: int, t: int) -> np.ndarray:
    """Same quantity obtained from the martingale increment correlation:
    [(q-1)mu]^(2t+2) [(q-1) mu mu]^-(t+1) Q^t y."""
    q, mu = spec.q, spec.mu[i]
    y = y_vector(spec, i, i)
    pref = ((q - 1) * mu) ** (2 * t + 2) / ((q - 1) * mu * mu) ** (t + 1)
    return pref * np.linalg.matrix_power(spec.Q, t) @ y


def theory_ZZ(spec: SignalSpectrum, i: int, j: int, t: int) -> np.ndarray:
    """Per-root-type E[Z_t Z'_t'] for any t' >= t."""
    q, mi, mj = spec.q, spec.mu[i], spec.mu[j]
    y = y_vector(spec, i, j)
    acc = spec.phi[:, i] * spec.phi[:, j]
    Qs = y.copy()
    for s in range(t):
        acc = acc + Qs / ((q - 1) * mi * mj) ** (s + 1)
        Qs = spec.Q @ Qs
    return acc


def mc_moment_suite(params: ModelParams, t_max: int = 4, trials: int = 10 ** 5,
                    seed: int = 0, pairs=None) -> MomentReport:
    """Monte Carlo estimates of the first and second moments of the tree
    functionals, per root type, against their closed forms."""
    if trials < 1000:
        raise ValueError("use at least 1000 trials")
    spec = signal_spectrum(params)
    q, r = spec.q, spec.r
    law = child_law(params, spec.d)
    idx = [i for i in range(r) if spec.mu[i] != 0]
    pairs = pairs or [(i, j) for i, j in itertools.combinations_with_replacement(idx, 2)]
    rep = MomentReport(trials=trials)
    ff_stats: dict = {}
    for k in range(r):
        counts = generation_counts(params, k, t_max + 1, trials,
                                   seed=int(np.random.SeedSequence([seed, k]).generate_state(1)[0]),
                                   law=law)
        cf = counts.astype(float)
        f = {i: cf @ spec.phi[:, i] for i in idx}  # trials x (t_max+2)
        Z = {i: f[i] / ((q - 1) * spec.mu[i]) ** np.arange(t_max + 2) for i in idx}
        for i in idx:
            theta = (q - 1) * spec.mu[i]
            for t in range(t_max + 1):
                m, se = _mean_se(f[i][:, t])
                rep.rows.append(MomentRow("f", i, i, t, t, k, m, se, theta ** t * spec.phi[k, i]))
                F = (f[i][:, t + 1] - theta * f[i][:, t]) ** 2
                m, se = _mean_se(F)
                rep.rows.append(MomentRow("F", i, i, t, t, k, m, se,
                                          theory_increment_square(spec, i, t)[k]))
        for i, j in pairs:
            for t in range(t_max + 1):
                prod = f[i][:, t] * f[j][:, t]
                m, se = _mean_se(prod)
                rep.rows.append(MomentRow("ff", i, j, t, t, k, m, se,
                                          theory_cross_moment(spec, i, j, t)[k]))
                ff_stats.setdefault((i, j, t), []).append((m, se))
                for t2 in range(t, t_max + 1):
                    m, se = _mean_se(Z[i][:, t] * Z[j][:, t2])
                    rep.rows.append(MomentRow("ZZ", i, j, t, t2, k, m, se,
                                              theory_ZZ(spec, i, j, t)[k]))
        for i in idx:
            inc = np.diff(Z[i][:, : t_max + 2], axis=1)
            for s in range(t_max + 1):
                for t in range(s + 1, t_max + 1):
                    m, se = _mean_se(inc[:, s] * inc[:, t])
                    rep.rows.append(MomentRow("cov_increments", i, i, s, t, k, m, se, 0.0))
    for (i, j, t), vals in ff_stats.items():
        m = sum(spec.pi[k] * v[0] for k, v in enumerate(vals))
        se = math.sqrt(sum((spec.pi[k] * v[1]) ** 2 for k, v in enumerate(vals)))
        theory = 0.0
        if i == j:
            theory = ((q - 1) * spec.mu[i]) ** (2 * t) * gamma_ell(spec, i, t)[0]
        rep.rows.append(MomentRow("pi_ff", i, j, t, t, -1, m, se, theory))
    rep.notes["increment_prefactor"] = _adjudicate_prefactor(spec, idx, t_max, rep)
    return rep


def _adjudicate_prefactor(spec, idx, t_max, rep) -> dict:
    """Compare the two expressions for E[(f_{t+1} - (q-1) mu f_t)^2]."""
    gap = 0.0
    for i in idx:
        for t in range(t_max + 1):
            a = theory_increment_square(spec, i, t)
            b = theory_increment_square_via_martingale(spec, i, t)
            gap = max(gap, float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300))))
    zs = [abs(r.z) for r in rep.rows if r.kind == "F"]
    return {"max_relative_gap": gap, "max_abs_z_F": max(zs, default=0.0)}


def mc_moments(params: ModelParams, i: int, j: int, t: int, trials: int = 10 ** 5,
               seed: int = 0) -> MomentReport:
    """Moment rows for a single (i, j, t)."""
    full = mc_moment_suite(params, t_max=t, trials=trials, seed=seed, pairs=[(i, j)])
    rows = [r for r in full.rows if r.t == t and {r.i, r.j} <= {i, j}]
    return MomentReport(rows, full.trials, full.discarded, full.notes)


# -- functional on hypergraphs -----------------------------------------------

def nb_path_sum(G: Hypergraph, o: int, values: np.ndarray, t: int) -> float:
    """Sum of ``values[x_t]`` over non-backtracking paths o = x_0, e_1, x_1, ...,
    e_t, x_t (x_k in e_k minus x_{k-1}, e_{k+1} != e_k), by depth-first search."""
    if t == 0:
        return float(values[o])
    total = 0.0
    stack = [(o, -1, 0)]
    while stack:
        x, prev_e, k = stack.pop()
        for e in G.vertex_edges(x):
            if e == prev_e:
                continue
            for y in G.edges[e]:
                if y == x:
                    continue
                if k + 1 == t:
                    total += values[y]
                else:
                    stack.append((int(y), int(e), k + 1))
    return total


def h_functional(G: Hypergraph, o: int, xi, sigma, t: int) -> float:
    """Zero if the radius-t ball of ``o`` is tangled; otherwise the sum of
    xi(sigma(x_t)) over non-backtracking paths of length t from ``o``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if not ball_is_tangle_free(G, o, t):
        return 0.0
    values = np.asarray(xi, dtype=float)[np.asarray(sigma)]
    return nb_path_sum(G, o, values, t)
