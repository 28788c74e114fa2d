"""Simulated annealing over node orderings with interval-flip proposals."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .core import ArcsError, Dataset, Permutation, reproject_factor
from .prox import ProxOptions, initial_factor, run_solver
from .score import McpParams, ScoreContext, ScoreData

log = logging.getLogger(__name__)

GEOMETRIC = "geometric"
LINEAR = "linear"


@dataclass(frozen=True)
class AnnealConfig:
    iterations: int = 10_000
    flip_len: int = 4
    t_start: float = 1.0
    t_end: Optional[float] = None  # defaults to t_start / 100
    schedule: str = GEOMETRIC
    seed: int = 0
    # re-solve every column for each proposal instead of only the flipped window
    full_solve: bool = False

    def __post_init__(self):
        if self.t_end is None:
            object.__setattr__(self, "t_end", 0.01 * self.t_start)
        if self.iterations < 1:
            raise ArcsError("annealing needs at least one iteration")
        if self.flip_len < 2:
            raise ArcsError("flip length must be at least 2")
        if not (self.t_start >= self.t_end > 0):
            raise ArcsError("temperatures must satisfy t_start >= t_end > 0")
        if self.schedule not in (GEOMETRIC, LINEAR):
            raise ArcsError(f"unknown schedule {self.schedule!r}")


@dataclass
class AnnealTrace:
    iteration: list = field(default_factory=list)
    temperature: list = field(default_factory=list)
    f_proposed: list = field(default_factory=list)
    accepted: list = field(default_factory=list)
    f_best: list = field(default_factory=list)
    f_current: list = field(default_factory=list)

    def append(self, i, temp, f_prop, acc, f_best, f_cur):
        self.iteration.append(i)
        self.temperature.append(temp)
        self.f_proposed.append(f_prop)
        self.accepted.append(acc)
        self.f_best.append(f_best)
        self.f_current.append(f_cur)

    def __len__(self):
        return len(self.iteration)

    def rows(self):
        return zip(self.iteration, self.temperature, self.f_proposed, self.accepted, self.f_best)


@dataclass
class ArcsResult:
    perm: Permutation
    factor: np.ndarray
    score: float
    initial_score: float
    trace: AnnealTrace
    best_perm: Permutation
    best_factor: np.ndarray
    best_score: float


def flip_window(pi: Permutation, start: int, m: int) -> Permutation:
    order = pi.order.copy()
    order[start:start + m] = order[start:start + m][::-1]
    return Permutation(order)


def propose_flip(pi: Permutation, m: int, rng: np.random.Generator) -> Permutation:
    """Reverse a uniformly placed window of ``m`` consecutive positions."""
    if not 2 <= m <= pi.p:
        raise ArcsError(f"flip length {m} must lie in [2, p={pi.p}]")
    start = int(rng.integers(0, pi.p - m + 1))
    return flip_window(pi, start, m)


def acceptance_probability(f_new: float, f_old: float, T: float) -> float:
    """Metropolis rule ``min(1, exp(-(f_new - f_old) / T))``."""
    if not T > 0:
        raise ArcsError(f"temperature must be positive, got {T}")
    diff = f_new - f_old
    if diff <= 0:
        return 1.0
    return math.exp(-diff / T)


def temperature(i: int, cfg: AnnealConfig) -> float:
    frac = i / cfg.iterations
    if cfg.schedule == GEOMETRIC:
        return cfg.t_start * (cfg.t_end / cfg.t_start) ** frac
    return cfg.t_start + (cfg.t_end - cfg.t_start) * frac


def rng_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent generators for proposals and acceptance draws."""
    props, accept = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(props), np.random.default_rng(accept)


def _total_score(ctx: ScoreContext, L: np.ndarray, theta: McpParams) -> float:
    every = np.ones(ctx.p, dtype=np.bool_)
    smooth = _kernels.smooth_loss(ctx.covs, ctx.col_cov, ctx.weights, L, every)
    return smooth + _kernels.penalty(L, every, theta.gamma, theta.lam)


def score_ordering(stats: ScoreData, P: Permutation, theta: McpParams, opts: ProxOptions,
                   warm: Optional[np.ndarray] = None) -> tuple[np.ndarray, float]:
    ctx = stats.bind(P)
    L0 = initial_factor(ctx) if warm is None else warm
    L, _ = run_solver(ctx, theta, opts, L0)
    return L, _total_score(ctx, L, theta)


def run_arcs(
    data: Dataset | ScoreData,
    P0: Permutation,
    theta: McpParams,
    cfg: AnnealConfig = AnnealConfig(),
    opts: ProxOptions = ProxOptions(),
    warm: Optional[np.ndarray] = None,
) -> ArcsResult:
    """Anneal over orderings starting at ``P0`` with the penalty fixed to ``theta``.

    Each proposal reverses a window of ``cfg.flip_len`` positions.  The score
    separates over columns of the factor, and only the columns inside the
    window see a different subproblem, so by default just those are re-solved
    (warm-started from the current factor).  Runs ``cfg.iterations + 1``
    proposals at temperatures ``temperature(0..N)``.
    """
    stats = data if isinstance(data, ScoreData) else ScoreData.from_dataset(data)
    p = stats.p
    m = cfg.flip_len
    if not 2 <= m <= p:
        raise ArcsError(f"flip length {m} must lie in [2, p={p}]")
    rng_prop, rng_acc = rng_streams(cfg.seed)

    cur_P = P0
    cur_L, cur_f = score_ordering(stats, P0, theta, opts, warm)
    f0 = cur_f
    best = (cur_P, cur_L, cur_f)
    trace = AnnealTrace()
    active = np.zeros(p, dtype=np.bool_)

    for i in range(cfg.iterations + 1):
        T = temperature(i, cfg)
        start = int(rng_prop.integers(0, p - m + 1))
        new_P = flip_window(cur_P, start, m)
        ctx = stats.bind(new_P)
        L0 = reproject_factor(cur_L, cur_P, new_P)
        if cfg.full_solve:
            active[:] = True
        else:
            active[:] = False
            active[start:start + m] = True
        new_L, _ = run_solver(ctx, theta, opts, L0, active)
        new_f = _total_score(ctx, new_L, theta)

        alpha = acceptance_probability(new_f, cur_f, T)
        accept = bool(rng_acc.random() < alpha)
        if accept:
            cur_P, cur_L, cur_f = new_P, new_L, new_f
            if cur_f < best[2]:
                best = (cur_P, cur_L, cur_f)
        trace.append(i, T, new_f, accept, best[2], cur_f)

    log.info("annealing finished: f(P0)=%.4f final=%.4f best=%.4f", f0, cur_f, best[2])
    return ArcsResult(cur_P, cur_L, cur_f, f0, trace, *best)
