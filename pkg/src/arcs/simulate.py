"""Synthetic Gaussian SEM ground truth and data generation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ArcsError, Dataset, WeightedDag, topological_sort
from .score import EXPERIMENTAL, OBSERVATIONAL


@dataclass(frozen=True)
class SimConfig:
    p: int
    s0: int
    n: int  # total rows (observational) or rows per intervention block (experimental)
    mode: str = OBSERVATIONAL
    coef_low: float = 0.5
    coef_high: float = 0.8
    intervention_sd: float = 1.0
    normalize: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.p < 1:
            raise ArcsError("p must be positive")
        if not 0 <= self.s0 <= self.p * (self.p - 1) // 2:
            raise ArcsError(f"s0={self.s0} is infeasible for p={self.p}")
        if not 0 < self.coef_low < self.coef_high:
            raise ArcsError("coefficient range must satisfy 0 < low < high")
        if self.mode not in (OBSERVATIONAL, EXPERIMENTAL):
            raise ArcsError(f"unknown mode {self.mode!r}")
        if self.n < 0:
            raise ArcsError("sample size must be nonnegative")


def random_dag(p: int, s0: int, rng: np.random.Generator) -> WeightedDag:
    """Uniform random ordering, then ``s0`` distinct forward pairs drawn
    uniformly without replacement.  Edge weights are placeholders (1.0)."""
    n_pairs = p * (p - 1) // 2
    if not 0 <= s0 <= n_pairs:
        raise ArcsError(f"cannot place {s0} edges on {p} nodes")
    order = rng.permutation(p)
    lo, hi = np.triu_indices(p, 1)
    chosen = rng.choice(n_pairs, size=s0, replace=False)
    B = np.zeros((p, p))
    B[order[lo[chosen]], order[hi[chosen]]] = 1.0
    return WeightedDag(B)


def assign_weights(g: WeightedDag, rng: np.random.Generator,
                   low: float = 0.5, high: float = 0.8) -> WeightedDag:
    """Draw each edge weight from ``[-high, -low] U [low, high]``; unit noise."""
    A = g.adjacency
    k = int(A.sum())
    mags = rng.uniform(low, high, size=k)
    signs = np.where(rng.random(k) < 0.5, -1.0, 1.0)
    B = np.zeros_like(g.coefficients)
    B[A] = mags * signs
    return WeightedDag(B, np.ones(g.p))


def model_covariance(g: WeightedDag, normalize: bool = False) -> tuple[np.ndarray, WeightedDag]:
    """Covariance implied by the SEM, ``((I - B) Omega^-1 (I - B)^T)^-1``.

    With ``normalize`` the covariance is rescaled to unit diagonal and the
    returned DAG carries weights and variances rescaled to match.
    """
    p = g.p
    IB = np.eye(p) - g.coefficients
    # (I - B) is unit triangular up to a permutation, hence always invertible
    Minv = np.linalg.solve(IB, np.eye(p))
    Sigma = Minv.T @ (g.noise_variances[:, None] * Minv)
    Sigma = (Sigma + Sigma.T) / 2
    if not normalize:
        return Sigma, g
    d = 1.0 / np.sqrt(np.diag(Sigma))
    Sigma = d[:, None] * Sigma * d[None, :]
    np.fill_diagonal(Sigma, 1.0)
    B = g.coefficients * d[None, :] / d[:, None]
    return Sigma, WeightedDag(B, g.noise_variances * d**2, check=False)


def sample_observational(Sigma: np.ndarray, n: int, rng: np.random.Generator) -> Dataset:
    Sigma = np.asarray(Sigma, dtype=float)
    try:
        C = np.linalg.cholesky(Sigma)
    except np.linalg.LinAlgError:
        raise ArcsError("covariance is not positive definite") from None
    Z = rng.standard_normal((n, Sigma.shape[0]))
    return Dataset(Z @ C.T)


def sample_experimental(g: WeightedDag, per_block: int, rng: np.random.Generator,
                        intervention_sd: float = 1.0) -> Dataset:
    """One block per node; in block ``j`` node ``j`` is drawn from
    ``N(0, intervention_sd^2)`` and every other node from its structural equation."""
    p = g.p
    parents_first = topological_sort(g).order[::-1]
    B = g.coefficients
    sd = np.sqrt(g.noise_variances)
    blocks = []
    for j in range(p):
        X = np.zeros((per_block, p))
        for v in parents_first:
            z = rng.standard_normal(per_block)
            if v == j:
                X[:, v] = intervention_sd * z
            else:
                X[:, v] = X @ B[:, v] + sd[v] * z
        blocks.append(X)
    data = np.vstack(blocks) if blocks else np.zeros((0, p))
    interventions = [frozenset({j}) for j in range(p) for _ in range(per_block)]
    return Dataset(data, interventions)


def simulate(cfg: SimConfig, rng: Optional[np.random.Generator] = None) -> tuple[Dataset, WeightedDag]:
    """Draw a random weighted DAG and a dataset from it.

    The returned DAG is the (normalized) generating model.
    """
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    g = assign_weights(random_dag(cfg.p, cfg.s0, rng), rng, cfg.coef_low, cfg.coef_high)
    Sigma, g = model_covariance(g, normalize=cfg.normalize)
    if cfg.mode == OBSERVATIONAL:
        return sample_observational(Sigma, cfg.n, rng), g
    return sample_experimental(g, cfg.n, rng, cfg.intervention_sd), g
