"""BIC selection of the MCP parameters at a fixed initial ordering."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import ArcsError, Permutation
from .prox import ProxOptions, initial_factor, run_solver
from .score import McpParams, ScoreContext, likelihood

DEFAULT_GAMMAS = (2.0, 10.0, 50.0, 100.0)


@dataclass(frozen=True)
class TuningGrid:
    gammas: tuple
    lambdas: tuple

    def __post_init__(self):
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        if not self.gammas or not self.lambdas:
            raise ArcsError("tuning grid must be nonempty")
        if any(g <= 1 for g in self.gammas):
            raise ArcsError("every gamma must exceed 1")
        if any(v < 0 for v in self.lambdas):
            raise ArcsError("lambdas must be nonnegative")

    def __len__(self):
        return len(self.gammas) * len(self.lambdas)

    def pairs(self):
        return [McpParams(g, v) for g in self.gammas for v in self.lambdas]


def default_grid(n: int, gammas: Sequence[float] = DEFAULT_GAMMAS,
                 min_frac: float = 0.1, count: int = 20) -> TuningGrid:
    """Gammas ``{2, 10, 50, 100}`` and ``count`` equi-spaced lambdas on
    ``[min_frac * sqrt(n), sqrt(n)]``."""
    if n < 1:
        raise ArcsError("sample size must be at least 1")
    top = math.sqrt(n)
    return TuningGrid(tuple(gammas), tuple(np.linspace(min_frac * top, top, count)))


def bic_score(L: np.ndarray, ctx: ScoreContext, n: Optional[int] = None) -> float:
    """``2 * loglik + ||L||_0 * log(max(n, p))``; the count includes the diagonal."""
    n = ctx.n if n is None else n
    nnz = int(np.count_nonzero(L))
    return 2.0 * likelihood(L, ctx) + nnz * math.log(max(n, ctx.p))


@dataclass
class BicRecord:
    gamma: float
    lam: float
    bic: float
    n_edges: int
    loglik: float


def bic_path(P0: Permutation, ctx: ScoreContext, grid: TuningGrid,
             opts: ProxOptions = ProxOptions(), n: Optional[int] = None) -> list[BicRecord]:
    """Solve at every grid point; lambdas run largest first with warm starts."""
    if ctx.perm != P0:
        raise ArcsError("score context is bound to a different ordering")
    records = []
    for gamma in grid.gammas:
        L = initial_factor(ctx)
        for lam in sorted(grid.lambdas, reverse=True):
            theta = McpParams(gamma, lam)
            L, _ = run_solver(ctx, theta, opts, L)
            records.append(BicRecord(gamma, lam, bic_score(L, ctx, n),
                                     int(np.count_nonzero(np.tril(L, -1))), likelihood(L, ctx)))
    return records


def best_record(records: Sequence[BicRecord]) -> BicRecord:
    # ties: larger lambda, then smaller gamma
    return min(records, key=lambda r: (r.bic, -r.lam, r.gamma))


def select_tuning(P0: Permutation, ctx: ScoreContext, grid: TuningGrid,
                  opts: ProxOptions = ProxOptions(), n: Optional[int] = None) -> McpParams:
    """Grid point minimizing BIC at the fixed ordering ``P0``."""
    best = best_record(bic_path(P0, ctx, grid, opts, n))
    return McpParams(best.gamma, best.lam)
