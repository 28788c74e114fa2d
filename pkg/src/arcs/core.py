"""Shared domain types: permutations, weighted DAGs, datasets and covariances.

Node indices are 0-based throughout the library.  The 1-based convention
only appears at the file and command-line boundary (see :mod:`arcs.io`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np


class ArcsError(Exception):
    """Base class for all errors raised by the package."""

    code = "E_ARCS"


class CycleError(ArcsError):
    code = "E_CYCLE"

    def __init__(self, cycle: Sequence[int]):
        self.cycle = list(cycle)
        path = "->".join(str(v + 1) for v in self.cycle)
        super().__init__(f"graph contains a cycle: {path}")


class InvalidFactorError(ArcsError):
    code = "E_FACTOR"


class EmptyStratumError(ArcsError):
    code = "E_STRATUM"


class DimensionError(ArcsError):
    code = "E_DIM"


# --------------------------------------------------------------------------
# Permutation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Permutation:
    """An ordering ``pi`` of the nodes ``0..p-1``.

    ``order[a]`` is the node placed at position ``a``.  The associated matrix
    ``P`` has ``e_{pi(a)}`` as its a-th row, so ``P @ v == v[order]``.
    Under the reversal convention used for structure learning, parents sit
    *after* their children in ``order``.
    """

    order: np.ndarray

    def __post_init__(self):
        order = np.asarray(self.order, dtype=np.int64).ravel()
        p = order.size
        if p == 0 or not np.array_equal(np.sort(order), np.arange(p)):
            raise ArcsError(f"not a permutation of 0..{p - 1}: {order.tolist()}")
        order.setflags(write=False)
        object.__setattr__(self, "order", order)

    @classmethod
    def identity(cls, p: int) -> "Permutation":
        return cls(np.arange(p))

    @classmethod
    def from_one_based(cls, order: Iterable[int]) -> "Permutation":
        return cls(np.asarray(list(order), dtype=np.int64) - 1)

    @classmethod
    def random(cls, p: int, rng: np.random.Generator) -> "Permutation":
        return cls(rng.permutation(p))

    @property
    def p(self) -> int:
        return self.order.size

    def one_based(self) -> list[int]:
        return (self.order + 1).tolist()

    def matrix(self) -> np.ndarray:
        return np.eye(self.p)[self.order]

    def inverse(self) -> "Permutation":
        return Permutation(np.argsort(self.order))

    def positions(self) -> np.ndarray:
        """``positions()[v]`` is the position of node ``v``."""
        return np.argsort(self.order)

    def apply(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v)[self.order]

    def __eq__(self, other):
        return isinstance(other, Permutation) and np.array_equal(self.order, other.order)

    def __hash__(self):
        return hash(self.order.tobytes())

    def __repr__(self):
        return f"Permutation({self.one_based()})"


# --------------------------------------------------------------------------
# Weighted DAG
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightedDag:
    """Coefficient matrix ``B`` (``B[i, j]`` weights the edge ``i -> j``)
    together with the noise variances, i.e. the diagonal of ``Omega``."""

    coefficients: np.ndarray
    noise_variances: np.ndarray = None
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        B = np.array(self.coefficients, dtype=float)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise DimensionError(f"coefficient matrix must be square, got {B.shape}")
        p = B.shape[0]
        if self.noise_variances is None:
            omega = np.ones(p)
        else:
            omega = np.array(self.noise_variances, dtype=float).ravel()
        if omega.shape != (p,):
            raise DimensionError(f"expected {p} noise variances, got {omega.size}")
        if np.any(np.diag(B) != 0):
            raise ArcsError("coefficient matrix must have a zero diagonal")
        if np.any(omega <= 0):
            raise ArcsError("noise variances must be positive")
        B.setflags(write=False)
        omega.setflags(write=False)
        object.__setattr__(self, "coefficients", B)
        object.__setattr__(self, "noise_variances", omega)
        if self.check:
            topological_sort(self)

    @classmethod
    def from_edges(cls, p: int, edges: Iterable[tuple[int, int]], weight: float = 1.0) -> "WeightedDag":
        B = np.zeros((p, p))
        for i, j in edges:
            B[i, j] = weight
        return cls(B)

    @property
    def p(self) -> int:
        return self.coefficients.shape[0]

    @property
    def adjacency(self) -> np.ndarray:
        return self.coefficients != 0

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.adjacency))]

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(self.adjacency))

    def parents(self, j: int) -> list[int]:
        return np.flatnonzero(self.adjacency[:, j]).tolist()

    def binarized(self) -> "WeightedDag":
        return WeightedDag(self.adjacency.astype(float), self.noise_variances, check=False)


def topological_sort(g: WeightedDag) -> Permutation:
    """Return an ordering with every parent placed after its children.

    With this ordering ``P B P^T`` is strictly lower triangular.  Ties go to
    the smallest node index, so an edgeless graph gives the identity.
    """
    A = np.asarray(g.coefficients) != 0
    p = A.shape[0]
    n_children = A.sum(axis=1)
    placed = np.zeros(p, dtype=bool)
    order = []
    for _ in range(p):
        sinks = np.flatnonzero((n_children == 0) & ~placed)
        if sinks.size == 0:
            raise CycleError(_find_cycle(A, ~placed))
        v = sinks[0]
        placed[v] = True
        order.append(v)
        n_children -= A[:, v]
    return Permutation(np.array(order))


def _find_cycle(A: np.ndarray, remaining: np.ndarray) -> list[int]:
    # every remaining node has a remaining child, so walking children must revisit
    start = int(np.flatnonzero(remaining)[0])
    path, seen = [start], {start: 0}
    v = start
    while True:
        v = int(np.flatnonzero(A[v] & remaining)[0])
        if v in seen:
            return path[seen[v]:] + [v]
        seen[v] = len(path)
        path.append(v)


# --------------------------------------------------------------------------
# Dataset
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    """Observation matrix plus the set of intervened nodes for every row."""

    data: np.ndarray
    interventions: tuple = None

    def __post_init__(self):
        X = np.array(self.data, dtype=float)
        if X.ndim != 2:
            raise DimensionError(f"data must be a 2-d array, got shape {X.shape}")
        n, p = X.shape
        if self.interventions is None:
            ivs = (frozenset(),) * n
        else:
            ivs = tuple(frozenset(int(v) for v in s) for s in self.interventions)
        if len(ivs) != n:
            raise DimensionError(f"{len(ivs)} intervention sets for {n} rows")
        for row, s in enumerate(ivs):
            bad = [v for v in s if not 0 <= v < p]
            if bad:
                raise ArcsError(f"row {row}: intervention index out of range: {bad}")
        X.setflags(write=False)
        object.__setattr__(self, "data", X)
        object.__setattr__(self, "interventions", ivs)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]

    @property
    def is_experimental(self) -> bool:
        return any(self.interventions)

    def intervention_mask(self) -> np.ndarray:
        """Boolean ``(n, p)`` array; entry ``[h, j]`` marks node j intervened in row h."""
        M = np.zeros((self.n, self.p), dtype=bool)
        for h, s in enumerate(self.interventions):
            M[h, list(s)] = True
        return M

    def observed_rows(self, j: int) -> np.ndarray:
        """Row indices ``O_j`` in which node ``j`` follows its structural equation."""
        return np.flatnonzero(~self.intervention_mask()[:, j])

    def intervened_rows(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.intervention_mask()[:, j])

    def standardized(self) -> "Dataset":
        X = self.data - self.data.mean(axis=0)
        sd = X.std(axis=0)
        sd[sd == 0] = 1.0
        return Dataset(X / sd, self.interventions)

    def centered(self) -> "Dataset":
        return Dataset(self.data - self.data.mean(axis=0), self.interventions)


# --------------------------------------------------------------------------
# Covariances and factors
# --------------------------------------------------------------------------


def sample_covariance(data: np.ndarray, rows: Optional[np.ndarray] = None) -> np.ndarray:
    """Uncentered sample covariance ``X_rows^T X_rows / |rows|``."""
    X = np.asarray(data, dtype=float)
    if rows is not None:
        rows = np.asarray(rows)
        X = X[rows]
    if X.shape[0] == 0:
        raise EmptyStratumError("empty stratum")
    return X.T @ X / X.shape[0]


def permute_covariance(P: Permutation, S: np.ndarray) -> np.ndarray:
    """Return ``P S P^T``, i.e. ``out[a, b] = S[pi(a), pi(b)]``."""
    S = np.asarray(S)
    if S.shape != (P.p, P.p):
        raise DimensionError(f"covariance is {S.shape}, permutation has p={P.p}")
    return S[np.ix_(P.order, P.order)]


def check_factor(L: np.ndarray) -> np.ndarray:
    """Validate a lower-triangular factor with positive diagonal."""
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise DimensionError(f"factor must be square, got {L.shape}")
    if np.any(np.triu(L, 1) != 0):
        raise InvalidFactorError("invalid factor: nonzero entries above the diagonal")
    if not np.all(np.diag(L) > 0):
        raise InvalidFactorError("invalid factor: nonpositive diagonal entry")
    return L


def extract_weighted_dag(P: Permutation, L: np.ndarray) -> WeightedDag:
    """Read the DAG ``(B, Omega)`` encoded by a permuted factor ``L``.

    ``L~ = P^T L P`` restores node labels, then ``B[i, j] = -L~[i, j] / L~[j, j]``
    and ``omega_j^2 = 1 / L~[j, j]^2``.
    """
    L = check_factor(L)
    if L.shape[0] != P.p:
        raise DimensionError(f"factor is {L.shape}, permutation has p={P.p}")
    inv = P.positions()
    Lt = L[np.ix_(inv, inv)]
    d = np.diag(Lt).copy()
    B = -Lt / d[None, :]
    np.fill_diagonal(B, 0.0)
    B[B == 0] = 0.0  # drop negative zeros
    return WeightedDag(B, 1.0 / d**2, check=False)


def factor_from_dag(g: WeightedDag, P: Permutation) -> np.ndarray:
    """Build ``L = P (I - B) Omega^{-1/2} P^T`` for an ordering compatible with ``g``.

    Raises if ``P`` is not a reversed topological order of ``g``.
    """
    p = g.p
    Lt = (np.eye(p) - g.coefficients) / np.sqrt(g.noise_variances)[None, :]
    L = Lt[np.ix_(P.order, P.order)]
    if np.any(np.triu(L, 1) != 0):
        raise ArcsError("ordering is not compatible with the graph")
    return L


def reproject_factor(L: np.ndarray, old: Permutation, new: Permutation, floor: float = 1e-3) -> np.ndarray:
    """Carry a factor solved under ``old`` over to ordering ``new``.

    Entries that land above the diagonal are dropped and the diagonal is
    floored so the result stays a valid starting point.
    """
    # position in `old` of the node at each position of `new`
    idx = old.positions()[new.order]
    out = np.tril(np.asarray(L)[np.ix_(idx, idx)])
    d = np.diagonal(out).copy()
    np.fill_diagonal(out, np.maximum(d, floor))
    return out
