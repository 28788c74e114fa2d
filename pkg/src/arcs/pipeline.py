"""End-to-end learning: BIC selection, annealing, DAG extraction, refinement."""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .anneal import AnnealConfig, ArcsResult, run_arcs
from .core import Dataset, Permutation, WeightedDag, extract_weighted_dag
from .prox import ProxOptions
from .refine import RefineConfig, refine_structure
from .score import McpParams, ScoreData
from .select import DEFAULT_GAMMAS, BicRecord, best_record, bic_path, default_grid


def phase_seed(master_seed: int, phase: str) -> int:
    """Derive a per-phase seed from ``sha256("<master>:<phase>")``."""
    digest = hashlib.sha256(f"{master_seed}:{phase}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass
class LearnOptions:
    gammas: tuple = DEFAULT_GAMMAS
    lambda_min_frac: float = 0.1
    lambda_count: int = 20
    theta: Optional[McpParams] = None  # skips BIC selection when set
    anneal: AnnealConfig = field(default_factory=AnnealConfig)
    prox: ProxOptions = field(default_factory=ProxOptions)
    refine: bool = True
    refine_alpha: Optional[float] = None
    standardize: bool = False
    center: bool = False
    replicates: int = 1  # independent chains; the lowest final score wins
    threads: int = 1


@dataclass
class LearnResult:
    dag: WeightedDag  # final estimate (refined unless disabled)
    unrefined: WeightedDag
    perm: Permutation
    factor: np.ndarray
    theta: McpParams
    score: float
    initial_score: float
    arcs: ArcsResult
    bic: list[BicRecord]
    timings: dict


def learn(data: Dataset, P0: Permutation, opts: Optional[LearnOptions] = None) -> LearnResult:
    opts = opts or LearnOptions()
    timings = {}
    if opts.standardize:
        data = data.standardized()
    elif opts.center:
        data = data.centered()
    stats = ScoreData.from_dataset(data)

    t = time.perf_counter()
    records: list[BicRecord] = []
    theta = opts.theta
    if theta is None:
        grid = default_grid(data.n, opts.gammas, opts.lambda_min_frac, opts.lambda_count)
        records = bic_path(P0, stats.bind(P0), grid, opts.prox, n=data.n)
        best = best_record(records)
        theta = McpParams(best.gamma, best.lam)
    timings["select"] = time.perf_counter() - t

    t = time.perf_counter()
    res = _anneal_replicates(stats, P0, theta, opts)
    timings["anneal"] = time.perf_counter() - t

    t = time.perf_counter()
    raw = extract_weighted_dag(res.perm, res.factor)
    dag = raw
    if opts.refine:
        alpha = opts.refine_alpha
        cfg = RefineConfig(alpha) if alpha is not None else RefineConfig.default_for(data.p)
        dag = refine_structure(data, res.perm, raw, cfg)
    timings["refine"] = time.perf_counter() - t

    return LearnResult(dag, raw, res.perm, res.factor, theta, res.score,
                       res.initial_score, res, records, timings)


def _chain(args):
    stats, P0, theta, cfg, prox = args
    return run_arcs(stats, P0, theta, cfg, prox)


def _anneal_replicates(stats: ScoreData, P0: Permutation, theta: McpParams,
                       opts: LearnOptions) -> ArcsResult:
    if opts.replicates <= 1:
        return run_arcs(stats, P0, theta, opts.anneal, opts.prox)
    jobs = [
        (stats, P0, theta,
         replace(opts.anneal, seed=phase_seed(opts.anneal.seed, f"chain:{k}")), opts.prox)
        for k in range(opts.replicates)
    ]
    if opts.threads > 1:
        with ProcessPoolExecutor(max_workers=opts.threads) as pool:
            results = list(pool.map(_chain, jobs))
    else:
        results = [_chain(job) for job in jobs]
    return min(results, key=lambda r: r.score)


def noisy_order(order: Permutation, swaps: int, rng: np.random.Generator) -> Permutation:
    """Apply ``swaps`` random adjacent transpositions to an ordering."""
    o = order.order.copy()
    for _ in range(swaps):
        a = int(rng.integers(0, o.size - 1))
        o[a], o[a + 1] = o[a + 1], o[a]
    return Permutation(o)
