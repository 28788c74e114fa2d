"""Post-annealing edge pruning with Fisher-Z conditional independence tests."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import norm

from .core import ArcsError, Dataset, Permutation, WeightedDag

log = logging.getLogger(__name__)


class CollinearError(ArcsError):
    code = "E_COLLINEAR"


class DegenerateCorrelation(ArcsError):
    code = "E_DEGENERATE"


@dataclass(frozen=True)
class RefineConfig:
    alpha: float = 1e-3

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ArcsError(f"significance level must lie in (0, 1), got {self.alpha}")

    @classmethod
    def default_for(cls, p: int) -> "RefineConfig":
        return cls(1e-3 if p <= 50 else 1e-5)


def partial_correlation(data: np.ndarray, j: int, k: int, S=()) -> float:
    """Sample partial correlation of columns ``j`` and ``k`` given columns ``S``.

    Columns are centered; the result comes from the inverse of the
    correlation matrix of ``[j, k] + S``.
    """
    S = list(S)
    if j == k or j in S or k in S:
        raise ArcsError("j, k must be distinct and outside the conditioning set")
    X = np.asarray(data, dtype=float)
    if X.shape[0] < len(S) + 4:
        raise ArcsError(f"{X.shape[0]} rows are too few to condition on {len(S)} nodes")
    cols = [j, k] + S
    C = np.corrcoef(X[:, cols], rowvar=False)
    C = np.atleast_2d(C)
    if not np.all(np.isfinite(C)):
        raise CollinearError("collinear conditioning set (constant column)")
    if not S:
        return float(np.clip(C[0, 1], -1.0, 1.0))
    if np.linalg.cond(C) > 1e12:
        raise CollinearError("collinear conditioning set")
    prec = np.linalg.inv(C)
    r = -prec[0, 1] / math.sqrt(prec[0, 0] * prec[1, 1])
    return float(np.clip(r, -1.0, 1.0))


def fisher_z(r: float, n: int, s_size: int) -> float:
    """Fisher-Z statistic ``sqrt(n - |S| - 3) * atanh(r)``."""
    if abs(r) >= 1:
        raise DegenerateCorrelation(f"degenerate correlation r={r}")
    if n <= s_size + 3:
        raise ArcsError(f"need n > |S| + 3, got n={n}, |S|={s_size}")
    return 0.5 * math.sqrt(n - s_size - 3) * math.log((1 + r) / (1 - r))


def z_critical(alpha: float) -> float:
    return float(norm.ppf(1 - alpha / 2))


def refine_structure(
    data: Dataset,
    pi_hat: Permutation,
    B_hat: WeightedDag,
    cfg: Optional[RefineConfig] = None,
) -> WeightedDag:
    """Remove edges ``k -> j`` whose endpoints test conditionally independent
    given the other current parents of ``j``.

    Only rows where ``j`` is not intervened are used.  Parents of ``j`` are
    tested nearest-first in ``pi_hat`` (the reverse of the estimated
    topological order), and each removal shrinks later conditioning sets.
    Surviving edges keep their weights.
    """
    cfg = cfg or RefineConfig.default_for(data.p)
    zc = z_critical(cfg.alpha)
    pos = pi_hat.positions()
    mask = data.intervention_mask()
    B = np.array(B_hat.coefficients)
    for j in range(data.p):
        parents = sorted(B_hat.parents(j), key=lambda v: pos[v])
        if not parents:
            continue
        Xj = data.data[~mask[:, j]]
        n = Xj.shape[0]
        current = list(parents)
        for k in parents:
            S = [v for v in current if v != k]
            try:
                if n <= len(S) + 3:
                    raise ArcsError("too few rows")
                r = partial_correlation(Xj, j, k, S)
                z = fisher_z(r, n, len(S))
            except ArcsError as exc:
                warnings.warn(f"keeping edge {k + 1}->{j + 1}, test skipped: {exc}")
                continue
            if abs(z) < zc:
                current.remove(k)
                B[k, j] = 0.0
                log.debug("removed %d->%d (z=%.3f)", k + 1, j + 1, z)
    return WeightedDag(B, B_hat.noise_variances, check=False)
