"""Command line: ``arcs {simulate,learn,eval,bench}``.

Errors are reported on stderr as a single line ``error[<CODE>]: <message>``
and the process exits with status 2.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .anneal import AnnealConfig
from .core import ArcsError, Permutation, topological_sort
from .metrics import compare_experimental, compare_observational
from .pipeline import LearnOptions, learn, noisy_order, phase_seed
from .prox import ProxOptions
from .score import EXPERIMENTAL, OBSERVATIONAL, McpParams
from .select import DEFAULT_GAMMAS
from .simulate import SimConfig, simulate

log = logging.getLogger("arcs")

METRIC_KEYS = ("P", "TP", "R", "FP", "M", "SHD", "JI")


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _floats(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    return max(1, int(os.environ.get("ARCS_THREADS", "1")))


# --------------------------------------------------------------------------
# simulate
# --------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    per_block = args.per_block if args.mode == EXPERIMENTAL else args.n
    cfg = SimConfig(args.p, args.s0, per_block, mode=args.mode, coef_low=args.coef_low,
                    coef_high=args.coef_high, intervention_sd=args.intervention_sd,
                    normalize=not args.no_normalize, seed=phase_seed(args.seed, "simulate"))
    data, truth = simulate(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = {"data": out / "data.csv", "truth": out / "truth.edges"}
    io.write_data(files["data"], data.data)
    io.write_edge_list(files["truth"], truth)
    if args.mode == EXPERIMENTAL:
        files["interventions"] = out / "interventions.csv"
        io.write_interventions(files["interventions"], data.interventions)
    manifest = {
        "command": "simulate",
        "argv": args.argv,
        "config": _config(args),
        "seeds": {"master": args.seed, "simulate": cfg.seed},
        "n": data.n,
        "p": data.p,
        "s0": truth.n_edges,
        "outputs": {k: {"path": str(v), "sha256": _digest(v)} for k, v in files.items()},
    }
    io.write_json(out / "manifest.json", manifest)
    log.info("wrote %d x %d data to %s", data.n, data.p, out)
    return 0


# --------------------------------------------------------------------------
# learn
# --------------------------------------------------------------------------


def _initial_order(args, p: int) -> tuple[Permutation, str]:
    init = args.init
    if init is None:
        init = "from-dag" if args.init_dag else ("file" if args.init_order else "random")
    if init == "random":
        rng = np.random.default_rng(phase_seed(args.seed, "init"))
        return Permutation.random(p, rng), init
    if init == "file":
        if not args.init_order:
            raise ArcsError("--init file needs --init-order PATH")
        return io.read_order(args.init_order, p), init
    if not args.init_dag:
        raise ArcsError("--init from-dag needs --init-dag PATH")
    g = io.read_edge_list(args.init_dag)
    if g.p != p:
        raise ArcsError(f"initial DAG has p={g.p}, data has p={p}")
    return topological_sort(g), init


def _learn_options(args, threads: int) -> LearnOptions:
    theta = None
    if args.gamma is not None or args.lam is not None:
        if args.gamma is None or args.lam is None:
            raise ArcsError("--gamma and --lambda must be given together")
        theta = McpParams(args.gamma, args.lam)
    anneal = AnnealConfig(iterations=args.iters, flip_len=args.flip_len, t_start=args.t_start,
                          t_end=args.t_end, schedule=args.schedule,
                          seed=phase_seed(args.seed, "anneal"), full_solve=args.full_solve)
    prox = ProxOptions(t0=args.t0, kappa=args.kappa, max_iter=args.max_iter, tol=args.tol)
    return LearnOptions(gammas=args.gamma_grid, lambda_min_frac=args.lambda_min_frac,
                        lambda_count=args.lambda_count, theta=theta, anneal=anneal, prox=prox,
                        refine=not args.no_refine, refine_alpha=args.refine_alpha,
                        standardize=args.standardize, center=args.center,
                        replicates=args.replicates, threads=threads)


def cmd_learn(args) -> int:
    data = io.read_dataset(args.data, args.interventions, header=args.header)
    P0, init = _initial_order(args, data.p)
    opts = _learn_options(args, _threads(args))
    res = learn(data, P0, opts)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_edge_list(out, res.dag)
    outputs = {"estimate": out}
    if args.order_out:
        io.write_order(args.order_out, res.perm)
        outputs["order"] = Path(args.order_out)
    if args.trace:
        io.write_trace(args.trace, res.arcs.trace)
        outputs["trace"] = Path(args.trace)
    if args.bic_report:
        io.write_bic_report(args.bic_report, res.bic, res.theta)
        outputs["bic_report"] = Path(args.bic_report)

    inputs = {"data": args.data}
    for key in ("interventions", "init_order", "init_dag"):
        if getattr(args, key):
            inputs[key] = getattr(args, key)
    manifest = {
        "command": "learn",
        "argv": args.argv,
        "config": _config(args),
        "init": init,
        "initial_order": P0.one_based(),
        "seeds": {"master": args.seed, "init": phase_seed(args.seed, "init"),
                  "anneal": opts.anneal.seed},
        "inputs": {k: {"path": str(v), "sha256": _digest(v)} for k, v in inputs.items()},
        "selected": {"gamma": res.theta.gamma, "lambda": res.theta.lam,
                     "from_bic": opts.theta is None},
        "initial_score": res.initial_score,
        "final_score": res.score,
        "final_order": res.perm.one_based(),
        "n_edges": res.dag.n_edges,
        "n_edges_unrefined": res.unrefined.n_edges,
        "timings": res.timings,
        "outputs": {k: {"path": str(v), "sha256": _digest(v)} for k, v in outputs.items()},
    }
    io.write_json(args.manifest or str(out) + ".manifest.json", manifest)
    log.info("theta=(%g, %g) f(P0)=%.4f f(P)=%.4f edges=%d", res.theta.gamma, res.theta.lam,
             res.initial_score, res.score, res.dag.n_edges)
    return 0


# --------------------------------------------------------------------------
# eval
# --------------------------------------------------------------------------


def cmd_eval(args) -> int:
    est = io.read_edge_list(args.estimate)
    truth = io.read_edge_list(args.truth)
    compare = compare_experimental if args.experimental else compare_observational
    counts = compare(est, truth).as_dict()
    if args.out:
        io.write_json(args.out, counts)
    else:
        print(__import__("json").dumps(counts, sort_keys=True))
    return 0


# --------------------------------------------------------------------------
# bench
# --------------------------------------------------------------------------


def _bench_replicate(job):
    k, seed, args = job
    t = time.perf_counter()
    mode = args.mode
    size = args.per_block if mode == EXPERIMENTAL else args.n
    cfg = SimConfig(args.p, args.s0, size, mode=mode, seed=phase_seed(seed, "simulate"))
    data, truth = simulate(cfg)
    rng = np.random.default_rng(phase_seed(seed, "init"))
    if args.init == "random":
        P0 = Permutation.random(data.p, rng)
    else:
        P0 = noisy_order(topological_sort(truth), args.swaps, rng)
    anneal = AnnealConfig(iterations=args.iters, flip_len=args.flip_len, t_start=args.t_start,
                          t_end=args.t_end, seed=phase_seed(seed, "anneal"))
    prox = ProxOptions(tol=args.tol)
    res = learn(data, P0, LearnOptions(anneal=anneal, prox=prox, refine_alpha=args.refine_alpha))
    compare = compare_experimental if mode == EXPERIMENTAL else compare_observational
    counts = compare(res.dag, truth).as_dict()
    counts["runtime"] = time.perf_counter() - t
    return {"replicate": k, "seed": seed, **counts}


def cmd_bench(args) -> int:
    seeds = [phase_seed(args.seed, f"replicate:{k}") for k in range(args.replicates)]
    jobs = [(k, s, args) for k, s in enumerate(seeds)]
    threads = _threads(args)
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_bench_replicate, jobs))
    else:
        rows = [_bench_replicate(job) for job in jobs]
    cols = list(METRIC_KEYS) + ["runtime"]
    mean = {"replicate": "mean", "seed": ""}
    for c in cols:
        mean[c] = float(np.mean([r[c] for r in rows]))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=["replicate", "seed"] + cols, lineterminator="\n")
        w.writeheader()
        for r in rows + [mean]:
            w.writerow(r)
    finally:
        if args.out:
            fh.close()
    log.info("mean SHD %.2f, mean JI %.3f over %d replicates", mean["SHD"], mean["JI"], len(rows))
    return 0


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _config(args) -> dict:
    skip = {"func", "argv"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _add_anneal_flags(p):
    p.add_argument("--iters", type=int, default=10_000, help="annealing iterations N")
    p.add_argument("--flip-len", type=int, default=4, help="interval length m")
    p.add_argument("--t-start", type=float, default=1.0)
    p.add_argument("--t-end", type=float, default=None, help="default: t-start / 100")
    p.add_argument("--tol", type=float, default=1e-4, help="proximal-gradient tolerance")
    p.add_argument("--refine-alpha", type=float, default=None,
                   help="default: 1e-3 for p <= 50, else 1e-5")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed")
    common.add_argument("--threads", type=int, default=None,
                        help="worker processes (env ARCS_THREADS)")
    common.add_argument("--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="arcs", description=__doc__.splitlines()[0],
                                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="generate a random SEM and data")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--s0", type=int, required=True)
    p.add_argument("--mode", choices=[OBSERVATIONAL, EXPERIMENTAL], default=OBSERVATIONAL)
    p.add_argument("--n", type=int, default=100, help="rows (observational)")
    p.add_argument("--per-block", type=int, default=5, help="rows per intervention block")
    p.add_argument("--coef-low", type=float, default=0.5)
    p.add_argument("--coef-high", type=float, default=0.8)
    p.add_argument("--intervention-sd", type=float, default=1.0)
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("learn", parents=[common], help="learn a DAG from data")
    p.add_argument("data")
    p.add_argument("--interventions", help="intervention sidecar file")
    p.add_argument("--header", action="store_true", help="data file has a header row")
    p.add_argument("--init", choices=["random", "file", "from-dag"], default=None)
    p.add_argument("--init-order", help="file with a 1-based node ordering")
    p.add_argument("--init-dag", help="edge list whose topological sort seeds the search")
    p.add_argument("--gamma-grid", type=_floats, default=DEFAULT_GAMMAS)
    p.add_argument("--lambda-count", type=int, default=20)
    p.add_argument("--lambda-min-frac", type=float, default=0.1)
    p.add_argument("--gamma", type=float, default=None, help="fix gamma (skips BIC)")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="fix lambda")
    _add_anneal_flags(p)
    p.add_argument("--schedule", choices=["geometric", "linear"], default="geometric")
    p.add_argument("--t0", type=float, default=1.0, help="initial step scale")
    p.add_argument("--kappa", type=float, default=0.5, help="backtracking factor")
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--full-solve", action="store_true",
                   help="re-solve all columns for every proposal")
    p.add_argument("--no-refine", action="store_true")
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--center", action="store_true")
    p.add_argument("--replicates", type=int, default=1, help="independent annealing chains")
    p.add_argument("--trace", help="write the annealing trace CSV here")
    p.add_argument("--bic-report", help="write every BIC value here (CSV)")
    p.add_argument("--order-out", help="write the final ordering here")
    p.add_argument("--out", default="estimate.edges")
    p.add_argument("--manifest", default=None, help="default: <out>.manifest.json")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("eval", parents=[common], help="compare an estimate with the truth")
    p.add_argument("estimate")
    p.add_argument("truth")
    p.add_argument("--experimental", action="store_true", help="strict-orientation counting")
    p.add_argument("--out", default=None, help="JSON output (default: stdout)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", parents=[common], help="replicated simulate/learn/eval")
    p.add_argument("--p", type=int, default=20)
    p.add_argument("--s0", type=int, default=20)
    p.add_argument("--mode", choices=[OBSERVATIONAL, EXPERIMENTAL], default=EXPERIMENTAL)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--per-block", type=int, default=5)
    p.add_argument("--replicates", type=int, default=20)
    p.add_argument("--init", choices=["random", "informed"], default="random")
    p.add_argument("--swaps", type=int, default=5, help="adjacent swaps for informed init")
    _add_anneal_flags(p)
    p.set_defaults(t_start=100.0)
    p.add_argument("--out", default=None, help="CSV output (default: stdout)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    args.argv = argv
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ArcsError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"error[E_IO]: {exc}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
