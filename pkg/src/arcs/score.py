"""Cholesky loss, MCP penalty and the Gaussian likelihood scores.

The functions here are plain numpy and act as the reference for the
compiled solver in :mod:`arcs._kernels`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .core import (
    ArcsError,
    Dataset,
    DimensionError,
    EmptyStratumError,
    InvalidFactorError,
    Permutation,
    permute_covariance,
    sample_covariance,
)
from . import _kernels

OBSERVATIONAL = "observational"
EXPERIMENTAL = "experimental"


@dataclass(frozen=True)
class McpParams:
    """Minimax concave penalty parameters: concavity ``gamma`` and level ``lam``."""

    gamma: float
    lam: float

    def __post_init__(self):
        if not self.gamma > 1:
            raise ArcsError(f"MCP requires gamma > 1, got {self.gamma}")
        if not self.lam >= 0:
            raise ArcsError(f"MCP requires lambda >= 0, got {self.lam}")


def mcp(x, theta: McpParams):
    """Evaluate the MCP elementwise."""
    a = np.abs(x)
    g, lam = theta.gamma, theta.lam
    out = np.where(a < g * lam, lam * a - a**2 / (2 * g), 0.5 * g * lam**2)
    return float(out) if np.ndim(out) == 0 else out


def _logdet_factor(L: np.ndarray) -> float:
    d = np.diag(L)
    if np.any(d <= 0):
        raise InvalidFactorError("invalid factor: nonpositive diagonal entry")
    return float(np.sum(np.log(d)))


def cholesky_loss(L: np.ndarray, A: np.ndarray) -> float:
    """``tr(A L L^T) / 2 - log|L|`` for lower-triangular ``L``."""
    L = np.asarray(L, dtype=float)
    A = np.asarray(A, dtype=float)
    if A.shape != L.shape:
        raise DimensionError(f"factor {L.shape} and matrix {A.shape} differ")
    return 0.5 * float(np.sum((A @ L) * L)) - _logdet_factor(L)


def closed_form_minimizer(A: np.ndarray) -> np.ndarray:
    """Unique minimizer of :func:`cholesky_loss` over positive-diagonal
    lower-triangular factors: the Cholesky factor of ``A^{-1}``."""
    A = np.asarray(A, dtype=float)
    try:
        c = scipy.linalg.cho_factor(A, lower=True)
        Ainv = scipy.linalg.cho_solve(c, np.eye(A.shape[0]))
        return np.linalg.cholesky((Ainv + Ainv.T) / 2)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise ArcsError(f"matrix is not positive definite: {exc}") from None


# --------------------------------------------------------------------------
# Sufficient statistics and per-ordering score contexts
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScoreContext:
    """Sufficient statistics bound to one ordering.

    Column ``j`` of a factor is scored against ``covs[col_cov[j]]`` (already
    permuted) with weight ``weights[j]``: ``n`` for observational data,
    ``|O_pi(j)|`` for experimental data.
    """

    mode: str
    perm: Permutation
    covs: np.ndarray
    col_cov: np.ndarray
    weights: np.ndarray

    @property
    def p(self) -> int:
        return self.perm.p

    @property
    def n(self) -> float:
        """Total sample size (observational) or largest stratum (experimental)."""
        return float(self.weights.max())

    def column_cov(self, j: int) -> np.ndarray:
        return self.covs[self.col_cov[j]]


@dataclass(frozen=True)
class ScoreData:
    """Ordering-free sufficient statistics computed once from a dataset."""

    mode: str
    node_covs: np.ndarray  # (1, p, p) observational, (p, p, p) experimental
    counts: np.ndarray  # rows used for each node
    n_total: int

    @classmethod
    def from_dataset(cls, data: Dataset, mode: Optional[str] = None) -> "ScoreData":
        if mode is None:
            mode = EXPERIMENTAL if data.is_experimental else OBSERVATIONAL
        X = data.data
        if mode == OBSERVATIONAL:
            S = sample_covariance(X)
            return cls(mode, S[None], np.full(data.p, data.n, dtype=float), data.n)
        if mode != EXPERIMENTAL:
            raise ArcsError(f"unknown score mode {mode!r}")
        M = data.intervention_mask()
        covs = np.empty((data.p, data.p, data.p))
        counts = np.empty(data.p)
        full = None
        for j in range(data.p):
            rows = ~M[:, j]
            counts[j] = rows.sum()
            if counts[j] == 0:
                raise EmptyStratumError(f"node never observed: {j + 1}")
            if counts[j] == data.n:
                if full is None:
                    full = sample_covariance(X)
                covs[j] = full
            else:
                covs[j] = sample_covariance(X, rows)
        return cls(mode, covs, counts, data.n)

    @property
    def p(self) -> int:
        return self.node_covs.shape[1]

    @property
    def covariance(self) -> np.ndarray:
        if self.mode != OBSERVATIONAL:
            raise ArcsError("experimental data has no single covariance")
        return self.node_covs[0]

    def bind(self, perm: Permutation) -> ScoreContext:
        if perm.p != self.p:
            raise DimensionError(f"permutation has p={perm.p}, data has p={self.p}")
        if self.mode == OBSERVATIONAL:
            covs = permute_covariance(perm, self.node_covs[0])[None]
            col_cov = np.zeros(self.p, dtype=np.int64)
        else:
            covs = _kernels.permuted_stack(self.node_covs, perm.order)
            col_cov = np.arange(self.p, dtype=np.int64)
        return ScoreContext(self.mode, perm, covs, col_cov, self.counts[perm.order])


def observational_context(S: np.ndarray, n: float, perm: Permutation) -> ScoreContext:
    S = np.asarray(S, dtype=float)
    return ScoreData(OBSERVATIONAL, S[None], np.full(S.shape[0], float(n)), int(n)).bind(perm)


def experimental_context(node_covs: np.ndarray, counts: np.ndarray, perm: Permutation) -> ScoreContext:
    counts = np.asarray(counts, dtype=float)
    if np.any(counts <= 0):
        raise EmptyStratumError(f"node never observed: {int(np.argmin(counts)) + 1}")
    data = ScoreData(EXPERIMENTAL, np.asarray(node_covs, dtype=float), counts, int(counts.max()))
    return data.bind(perm)


# --------------------------------------------------------------------------
# Likelihoods
# --------------------------------------------------------------------------


def neg_loglik_obs(L: np.ndarray, P: Permutation, S: np.ndarray, n: float) -> float:
    """Observational negative log-likelihood ``n * cholesky_loss(L, P S P^T)``."""
    return n * cholesky_loss(L, permute_covariance(P, S))


def neg_loglik_exp(L: np.ndarray, ctx: ScoreContext) -> float:
    """Experimental negative log-likelihood, one Cholesky term per column
    weighted by the number of rows where that node is not intervened."""
    L = np.asarray(L, dtype=float)
    if L.shape != (ctx.p, ctx.p):
        raise DimensionError(f"factor {L.shape} does not match p={ctx.p}")
    if np.any(ctx.weights <= 0):
        raise EmptyStratumError("node never observed")
    C = ctx.covs[ctx.col_cov]
    quad = np.einsum("aj,jab,bj->j", L, C, L)
    return float(np.sum(ctx.weights * (0.5 * quad))) - float(
        np.sum(ctx.weights * np.log(_checked_diag(L)))
    )


def _checked_diag(L: np.ndarray) -> np.ndarray:
    d = np.diag(L)
    if np.any(d <= 0):
        raise InvalidFactorError("invalid factor: nonpositive diagonal entry")
    return d


def likelihood(L: np.ndarray, ctx: ScoreContext) -> float:
    """Unpenalized negative log-likelihood for the context's data mode."""
    if ctx.mode == OBSERVATIONAL:
        return ctx.n * cholesky_loss(L, ctx.covs[0])
    return neg_loglik_exp(L, ctx)


def penalty_total(L: np.ndarray, theta: McpParams) -> float:
    """MCP summed over the strictly lower triangle (the diagonal is free)."""
    L = np.asarray(L)
    return float(np.sum(mcp(L[np.tril_indices(L.shape[0], -1)], theta)))


def rc_loss(L: np.ndarray, ctx: ScoreContext, theta: McpParams) -> float:
    """Regularized Cholesky loss at the ordering bound to ``ctx``."""
    return likelihood(L, ctx) + penalty_total(L, theta)


def grad_obs(L: np.ndarray, permuted_cov: np.ndarray, n: float) -> np.ndarray:
    """Gradient of the observational likelihood over lower-triangular ``L``."""
    L = np.asarray(L, dtype=float)
    d = _checked_diag(L)
    return n * (np.tril(permuted_cov @ L) - np.diag(1.0 / d))


def grad_exp(L: np.ndarray, ctx: ScoreContext) -> np.ndarray:
    """Gradient of the experimental likelihood; column j only sees stratum j."""
    L = np.asarray(L, dtype=float)
    d = _checked_diag(L)
    C = ctx.covs[ctx.col_cov]
    G = np.einsum("jab,bj->aj", C, L)
    G = np.tril(G) - np.diag(1.0 / d)
    return G * ctx.weights[None, :]


def gradient(L: np.ndarray, ctx: ScoreContext) -> np.ndarray:
    if ctx.mode == OBSERVATIONAL:
        return grad_obs(L, ctx.covs[0], ctx.n)
    return grad_exp(L, ctx)
