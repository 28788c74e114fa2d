"""Structure-recovery metrics: edge counts, SHD and Jaccard index."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import ArcsError, DimensionError, WeightedDag, topological_sort


@dataclass(frozen=True)
class Pdag:
    """Partially directed graph: directed pairs ``(i, j)`` meaning ``i -> j``
    and undirected pairs stored as ``(min, max)``."""

    p: int
    directed: frozenset
    undirected: frozenset

    def __post_init__(self):
        directed = frozenset((int(i), int(j)) for i, j in self.directed)
        undirected = frozenset(tuple(sorted((int(i), int(j)))) for i, j in self.undirected)
        object.__setattr__(self, "directed", directed)
        object.__setattr__(self, "undirected", undirected)
        for i, j in directed | undirected:
            if i == j:
                raise ArcsError(f"self-loop on node {i + 1}")
            if not (0 <= i < self.p and 0 <= j < self.p):
                raise ArcsError(f"edge ({i + 1}, {j + 1}) out of range")
        pairs = [tuple(sorted(e)) for e in directed]
        if len(set(pairs)) != len(pairs) or set(pairs) & undirected:
            raise ArcsError("a node pair appears more than once")

    @property
    def n_edges(self) -> int:
        return len(self.directed) + len(self.undirected)

    def skeleton(self) -> set:
        return {tuple(sorted(e)) for e in self.directed} | set(self.undirected)

    def status(self, i: int, j: int):
        """How the pair {i, j} appears: ``None``, ``"-"``, or the directed tuple."""
        if (i, j) in self.directed:
            return (i, j)
        if (j, i) in self.directed:
            return (j, i)
        if tuple(sorted((i, j))) in self.undirected:
            return "-"
        return None


@dataclass(frozen=True)
class EvalCounts:
    P: int
    TP: int
    R: int
    FP: int
    M: int
    SHD: int
    JI: float

    def __post_init__(self):
        assert self.R == self.P - self.TP - self.FP, self
        assert self.SHD == self.R + self.FP + self.M, self
        assert min(self.P, self.TP, self.R, self.FP, self.M) >= 0, self
        assert 0.0 <= self.JI <= 1.0, self

    @classmethod
    def from_counts(cls, P: int, TP: int, FP: int, M: int, s0: int) -> "EvalCounts":
        R = P - TP - FP
        denom = s0 + P - TP
        ji = TP / denom if denom else 1.0
        return cls(P, TP, R, FP, M, R + FP + M, ji)

    def as_dict(self) -> dict:
        return {"P": self.P, "TP": self.TP, "R": self.R, "FP": self.FP,
                "M": self.M, "SHD": self.SHD, "JI": self.JI}


def dag_to_cpdag(g: WeightedDag) -> Pdag:
    """Markov equivalence class of ``g`` as a CPDAG.

    Edges in v-structures are compelled; the orientation rules of Meek
    (R1-R3) then propagate compelled edges until nothing changes.  Every
    remaining edge is reversible.
    """
    topological_sort(g)  # raises on cycles
    A = np.asarray(g.coefficients) != 0
    p = A.shape[0]
    adj = A | A.T
    comp = np.zeros_like(A)
    for j in range(p):
        pa = np.flatnonzero(A[:, j])
        for x in range(len(pa)):
            for y in range(x + 1, len(pa)):
                a, b = pa[x], pa[y]
                if not adj[a, b]:
                    comp[a, j] = comp[b, j] = True

    changed = True
    while changed:
        changed = False
        for a, b in zip(*np.nonzero(A & ~comp)):
            # a - b is still reversible; try to compel a -> b
            und = (A | A.T) & ~(comp | comp.T)
            if _r1(a, b, comp, adj) or _r2(a, b, comp) or _r3(a, b, comp, und, adj):
                comp[a, b] = True
                changed = True

    directed = {(int(i), int(j)) for i, j in zip(*np.nonzero(comp))}
    undirected = {(int(i), int(j)) for i, j in zip(*np.nonzero(A & ~comp))}
    return Pdag(p, frozenset(directed), frozenset(undirected))


def _r1(a, b, comp, adj):
    # c -> a, c not adjacent to b
    return bool(np.any(comp[:, a] & ~adj[:, b] & (np.arange(adj.shape[0]) != b)))


def _r2(a, b, comp):
    # a -> c -> b
    return bool(np.any(comp[a, :] & comp[:, b]))


def _r3(a, b, comp, und, adj):
    # a - c1 -> b, a - c2 -> b with c1, c2 non-adjacent
    cs = np.flatnonzero(und[a] & comp[:, b])
    for x in range(len(cs)):
        for y in range(x + 1, len(cs)):
            if not adj[cs[x], cs[y]]:
                return True
    return False


def _as_pdag(g: Union[WeightedDag, Pdag]) -> Pdag:
    if isinstance(g, Pdag):
        return g
    return Pdag(g.p, frozenset(g.edges), frozenset())


def compare_observational(est: Union[WeightedDag, Pdag], truth: WeightedDag) -> EvalCounts:
    """Counts where reversible edges of the true equivalence class are not
    penalized: an estimated edge is a true positive when it matches the
    true orientation, or when its status agrees in both CPDAGs."""
    if est.p != truth.p:
        raise DimensionError(f"estimate has p={est.p}, truth has p={truth.p}")
    est_pdag = _as_pdag(est)
    est_cp = est if isinstance(est, Pdag) else dag_to_cpdag(est)
    true_cp = dag_to_cpdag(truth)
    true_edges = set(truth.edges)
    true_skel = {tuple(sorted(e)) for e in true_edges}
    est_skel = est_pdag.skeleton()

    tp = 0
    for i, j in est_pdag.directed:
        if tuple(sorted((i, j))) not in true_skel:
            continue
        if (i, j) in true_edges or est_cp.status(i, j) == true_cp.status(i, j):
            tp += 1
    for i, j in est_pdag.undirected:
        if (i, j) in true_skel and est_cp.status(i, j) == true_cp.status(i, j):
            tp += 1
    fp = len(est_skel - true_skel)
    miss = len(true_skel - est_skel)
    return EvalCounts.from_counts(est_pdag.n_edges, tp, fp, miss, len(true_edges))


def compare_experimental(est: WeightedDag, truth: WeightedDag) -> EvalCounts:
    """Strict-orientation counts: a reversed edge is never a true positive."""
    if est.p != truth.p:
        raise DimensionError(f"estimate has p={est.p}, truth has p={truth.p}")
    E = est.adjacency
    T = truth.adjacency
    P = int(E.sum())
    fp = int(np.sum(E & ~(T | T.T)))
    rev = int(np.sum(E & T.T & ~T))
    miss = int(np.sum(T & ~(E | E.T)))
    return EvalCounts.from_counts(P, P - rev - fp, fp, miss, int(T.sum()))
