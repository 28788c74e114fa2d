"""MCP proximal operator and the proximal-gradient solver for the RC score."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .core import ArcsError, Permutation, check_factor
from .score import McpParams, ScoreContext, rc_loss

log = logging.getLogger(__name__)


class SolverError(ArcsError):
    code = "E_SOLVER"


@dataclass(frozen=True)
class ProxOptions:
    t0: float = 1.0
    kappa: float = 0.5
    max_iter: int = 200
    tol: float = 1e-4
    max_backtrack: int = 100

    def __post_init__(self):
        if not self.t0 > 0:
            raise ArcsError("t0 must be positive")
        if not 0 < self.kappa < 1:
            raise ArcsError("kappa must lie in (0, 1)")
        if not self.tol > 0:
            raise ArcsError("tol must be positive")
        if self.max_iter < 1:
            raise ArcsError("max_iter must be at least 1")


def prox_mcp_scalar(x: float, t: float, theta: McpParams) -> float:
    """Proximal map of ``t * mcp`` at ``x``.

    The thresholds are those of the unit MCP (``gamma = lam = 1``) with step
    ``t / gamma``, mapped back to the original scale.  Where the minimizer is
    not unique the result is 0.
    """
    if not t > 0:
        raise ArcsError(f"prox step must be positive, got {t}")
    return _kernels.prox_mcp(float(x), float(t), float(theta.gamma), float(theta.lam))


def prox_step(L: np.ndarray, grad: np.ndarray, t: float, theta: McpParams) -> np.ndarray:
    """One proximal-gradient update; the diagonal is left unpenalized.

    Raises :class:`SolverError` when the step leaves a nonpositive diagonal,
    which the solver treats as a failed line-search trial.
    """
    if not t > 0:
        raise ArcsError(f"prox step must be positive, got {t}")
    Lt = np.tril(np.asarray(L, dtype=float) - t * np.asarray(grad, dtype=float))
    out = Lt.copy()
    rows, cols = np.tril_indices(out.shape[0], -1)
    for i, j in zip(rows, cols):
        out[i, j] = _kernels.prox_mcp(Lt[i, j], t, theta.gamma, theta.lam)
    if np.any(np.diag(out) <= 0):
        raise SolverError("infeasible step: nonpositive diagonal")
    return out


def initial_factor(ctx: ScoreContext) -> np.ndarray:
    """Independence-model solution ``diag(1 / sqrt(S_jj))``."""
    d = np.array([ctx.column_cov(j)[j, j] for j in range(ctx.p)])
    d = np.where(d > 0, d, 1.0)
    return np.diag(1.0 / np.sqrt(d))


@dataclass
class SolveInfo:
    n_iter: int
    converged: bool
    history: np.ndarray


def run_solver(
    ctx: ScoreContext,
    theta: McpParams,
    opts: ProxOptions,
    L0: np.ndarray,
    active: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, SolveInfo]:
    """Run the compiled solver, optionally only on a subset of columns."""
    if active is None:
        active = np.ones(ctx.p, dtype=np.bool_)
    L, n_iter, status, history = _kernels.solve(
        ctx.covs,
        ctx.col_cov,
        ctx.weights.astype(float),
        np.ascontiguousarray(L0, dtype=float),
        np.asarray(active, dtype=np.bool_),
        float(theta.gamma),
        float(theta.lam),
        float(opts.t0),
        float(opts.kappa),
        int(opts.max_iter),
        float(opts.tol),
        int(opts.max_backtrack),
    )
    converged = status == _kernels.STATUS_CONVERGED
    if not np.all(np.isfinite(L)) or not np.all(np.isfinite(history)):
        raise SolverError(_divergence_message(ctx, n_iter))
    if not converged:
        _check_bounded(ctx, L, active, n_iter, status)
    return L, SolveInfo(n_iter, converged, history)


def _divergence_message(ctx: ScoreContext, n_iter: int) -> str:
    eig = min(float(np.linalg.eigvalsh(c)[0]) for c in ctx.covs)
    return (
        f"solver diverged after {n_iter} iterations; smallest covariance "
        f"eigenvalue is {eig:.3g} (covariance must be positive definite)"
    )


def _check_bounded(ctx, L, active, n_iter, status):
    why = "stalled in line search" if status == _kernels.STATUS_STALLED else "hit max_iter"
    cols = np.flatnonzero(active)
    singular = False
    for j in cols:
        block = ctx.column_cov(j)[j:, j:]
        w = np.linalg.eigvalsh(block)
        if w[0] <= 1e-12 * max(w[-1], 1e-300):
            singular = True
            break
    if singular:
        raise SolverError(
            f"no convergence ({why} after {n_iter} iterations): covariance block "
            f"for column {j + 1} is not positive definite, objective is unbounded"
        )
    log.debug("solver did not converge (%s after %d iterations)", why, n_iter)


def solve_rc_score(
    P: Permutation,
    ctx: ScoreContext,
    theta: McpParams,
    opts: ProxOptions = ProxOptions(),
    warm: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, float]:
    """Minimize the regularized Cholesky loss at ordering ``P``.

    Returns the factor and the RC score ``f(P)``.
    """
    if ctx.perm != P:
        raise ArcsError("score context is bound to a different ordering")
    L0 = initial_factor(ctx) if warm is None else check_factor(warm)
    L, _ = run_solver(ctx, theta, opts, L0)
    return L, rc_loss(L, ctx, theta)
