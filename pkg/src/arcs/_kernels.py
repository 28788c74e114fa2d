"""Compiled inner loops for the proximal-gradient solver.

Covariances are passed as a stack ``covs[k]`` already permuted to the
current ordering; column ``j`` of the factor is scored against
``covs[col_cov[j]]`` with weight ``weights[j]``.  The observational score
uses a single matrix shared by all columns.
"""

import math

import numpy as np
from numba import njit

STATUS_CONVERGED = 0
STATUS_MAX_ITER = 1
STATUS_STALLED = 2


@njit(cache=True)
def mcp(x, gamma, lam):
    a = abs(x)
    if a < gamma * lam:
        return lam * a - x * x / (2.0 * gamma)
    return 0.5 * gamma * lam * lam


@njit(cache=True)
def prox_mcp(x, t, gamma, lam):
    """argmin_u  t*mcp(u) + (u - x)^2 / 2, ties resolved to 0."""
    if lam == 0.0 or x == 0.0:
        return x
    # unit-MCP thresholds written in the original units, so tiny lam cannot overflow
    ax = abs(x)
    alpha = t / gamma
    if alpha < 1.0:
        if ax <= t * lam:
            return 0.0
        if ax <= lam * gamma:
            return math.copysign((ax - t * lam) / (1.0 - alpha), x)
        return x
    if ax <= lam * math.sqrt(gamma * t):
        return 0.0
    return x


@njit(cache=True)
def _column_product(S, L, j, out):
    # out[j:] = S[j:, j:] @ L[j:, j]
    p = L.shape[0]
    for a in range(j, p):
        acc = 0.0
        for b in range(j, p):
            acc += S[a, b] * L[b, j]
        out[a] = acc


@njit(cache=True)
def column_loss(covs, col_cov, weights, L, j, work):
    S = covs[col_cov[j]]
    _column_product(S, L, j, work)
    p = L.shape[0]
    q = 0.0
    for a in range(j, p):
        q += L[a, j] * work[a]
    return weights[j] * (0.5 * q - math.log(L[j, j]))


@njit(cache=True)
def smooth_loss(covs, col_cov, weights, L, active):
    p = L.shape[0]
    work = np.empty(p)
    total = 0.0
    for j in range(p):
        if active[j]:
            total += column_loss(covs, col_cov, weights, L, j, work)
    return total


@njit(cache=True)
def penalty(L, active, gamma, lam):
    p = L.shape[0]
    total = 0.0
    if lam == 0.0:
        return total
    for j in range(p):
        if active[j]:
            for i in range(j + 1, p):
                if L[i, j] != 0.0:
                    total += mcp(L[i, j], gamma, lam)
    return total


@njit(cache=True)
def gradient(covs, col_cov, weights, L, active, G):
    p = L.shape[0]
    work = np.empty(p)
    G[:, :] = 0.0
    for j in range(p):
        if not active[j]:
            continue
        _column_product(covs[col_cov[j]], L, j, work)
        w = weights[j]
        for a in range(j, p):
            G[a, j] = w * work[a]
        G[j, j] -= w / L[j, j]


@njit(cache=True)
def solve(covs, col_cov, weights, L0, active, gamma, lam, t0, kappa, max_iter, tol, max_backtrack):
    """Proximal gradient with backtracking on the columns flagged ``active``.

    Returns ``(L, n_iter, status, history)`` where ``history[k]`` is the
    penalized objective (active columns only) after iteration ``k``.
    """
    p = L0.shape[0]
    L = L0.copy()
    Lp = np.zeros_like(L)
    G = np.zeros_like(L)
    history = np.empty(max_iter + 1)
    ell = smooth_loss(covs, col_cov, weights, L, active)
    history[0] = ell + penalty(L, active, gamma, lam)
    status = STATUS_MAX_ITER
    k = 0
    err = np.inf
    while k < max_iter and err > tol:
        gradient(covs, col_cov, weights, L, active, G)
        gnorm = 0.0
        for j in range(p):
            if active[j]:
                for a in range(j, p):
                    gnorm += G[a, j] * G[a, j]
        gnorm = math.sqrt(gnorm)
        if gnorm == 0.0:
            status = STATUS_CONVERGED
            break
        t = t0 / gnorm
        accepted = False
        ell_new = 0.0
        for _ in range(max_backtrack):
            feasible = True
            for j in range(p):
                if not active[j]:
                    continue
                for a in range(j, p):
                    x = L[a, j] - t * G[a, j]
                    if a == j:
                        Lp[a, j] = x
                        if x <= 0.0:
                            feasible = False
                    else:
                        Lp[a, j] = prox_mcp(x, t, gamma, lam)
            if feasible:
                ell_new = smooth_loss(covs, col_cov, weights, Lp, active)
                lin = 0.0
                sq = 0.0
                for j in range(p):
                    if active[j]:
                        for a in range(j, p):
                            d = Lp[a, j] - L[a, j]
                            lin += G[a, j] * d
                            sq += d * d
                bound = ell + lin + sq / (2.0 * t)
                if ell_new <= bound + 1e-14 * (1.0 + abs(ell)):
                    accepted = True
                    break
            t *= kappa
        if not accepted:
            status = STATUS_STALLED
            break
        err = 0.0
        for j in range(p):
            if not active[j]:
                continue
            num = 0.0
            den = 0.0
            for a in range(j, p):
                d = Lp[a, j] - L[a, j]
                num += d * d
                den += L[a, j] * L[a, j]
            delta = math.sqrt(num) / max(1.0, math.sqrt(den))
            if delta > err:
                err = delta
        for j in range(p):
            if active[j]:
                for a in range(j, p):
                    L[a, j] = Lp[a, j]
        ell = ell_new
        k += 1
        history[k] = ell + penalty(L, active, gamma, lam)
        # objective change at roundoff level: the line search cannot resolve further
        if abs(history[k] - history[k - 1]) <= 1e-14 * (1.0 + abs(history[k - 1])):
            err = 0.0
    if err <= tol:
        status = STATUS_CONVERGED
    return L, k, status, history[: k + 1]


@njit(cache=True)
def permuted_stack(node_covs, order):
    """``out[j] = node_covs[order[j]]`` with rows and columns permuted by ``order``."""
    p = order.shape[0]
    out = np.empty((p, p, p))
    for j in range(p):
        S = node_covs[order[j]]
        for a in range(p):
            oa = order[a]
            for b in range(p):
                out[j, a, b] = S[oa, order[b]]
    return out
