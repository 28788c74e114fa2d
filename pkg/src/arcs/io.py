"""Readers and writers for the plain-text formats used by the command line.

All node indices in files are 1-based.

Edge list::

    # p=3
    1 2 0.7
    2 3 -0.55
    # omega
    1.0
    1.0
    1.0

Intervention sidecar: one line per data row, each a ``;``-separated list of
intervened nodes; an empty line marks a purely observational row.
"""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import ArcsError, Dataset, Permutation, WeightedDag


class ParseError(ArcsError):
    code = "E_PARSE"

    def __init__(self, path, line: Optional[int], msg: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {msg}")


_HEADER = re.compile(r"#\s*p\s*=\s*(\d+)\s*$")


def _num(x: float) -> str:
    return repr(float(x))


def read_edge_list(path) -> WeightedDag:
    lines = Path(path).read_text().splitlines()
    p = None
    B = None
    omega = []
    in_omega = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if p is None:
            m = _HEADER.match(line)
            if not m:
                raise ParseError(path, lineno, "expected header '# p=<p>'")
            p = int(m.group(1))
            B = np.zeros((p, p))
            continue
        if line.startswith("#"):
            if line[1:].strip().lower() == "omega":
                in_omega = True
            continue
        parts = line.split()
        if in_omega:
            if len(parts) != 1:
                raise ParseError(path, lineno, "expected one noise variance per line")
            try:
                omega.append(float(parts[0]))
            except ValueError:
                raise ParseError(path, lineno, f"bad number {parts[0]!r}") from None
            continue
        if len(parts) not in (2, 3):
            raise ParseError(path, lineno, "expected '<src> <dst> [weight]'")
        try:
            src, dst = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise ParseError(path, lineno, f"malformed edge {line!r}") from None
        if not (1 <= src <= p and 1 <= dst <= p):
            raise ParseError(path, lineno, f"node index out of range 1..{p}")
        if src == dst:
            raise ParseError(path, lineno, "self-loop")
        if w == 0:
            raise ParseError(path, lineno, "zero edge weight")
        B[src - 1, dst - 1] = w
    if p is None:
        raise ParseError(path, None, "empty edge list")
    if in_omega and len(omega) != p:
        raise ParseError(path, None, f"expected {p} noise variances, found {len(omega)}")
    try:
        return WeightedDag(B, omega if in_omega else None)
    except ArcsError as exc:
        raise ParseError(path, None, str(exc)) from None


def write_edge_list(path, g: WeightedDag, with_omega: bool = True) -> None:
    out = [f"# p={g.p}"]
    for i, j in g.edges:
        out.append(f"{i + 1} {j + 1} {_num(g.coefficients[i, j])}")
    if with_omega:
        out.append("# omega")
        out.extend(_num(v) for v in g.noise_variances)
    Path(path).write_text("\n".join(out) + "\n")


def read_data(path, header: bool = False) -> np.ndarray:
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if header and lineno == 1:
                continue
            if not rec or all(not c.strip() for c in rec):
                continue
            try:
                vals = [float(c) for c in rec]
            except ValueError:
                raise ParseError(path, lineno, "non-numeric value") from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise ParseError(path, lineno, f"expected {width} columns, found {len(vals)}")
            rows.append(vals)
    if not rows:
        raise ParseError(path, None, "no data rows")
    return np.array(rows)


def write_data(path, X: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in X:
            w.writerow([_num(v) for v in row])


def read_interventions(path, n: int, p: int) -> list[frozenset]:
    lines = Path(path).read_text().split("\n")
    if lines and lines[-1] == "":
        lines = lines[:-1]
    if len(lines) != n:
        raise ParseError(path, None, f"expected {n} lines (one per data row), found {len(lines)}")
    sets = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            sets.append(frozenset())
            continue
        try:
            idx = [int(tok) for tok in line.split(";") if tok.strip()]
        except ValueError:
            raise ParseError(path, lineno, f"malformed intervention list {line!r}") from None
        if any(not 1 <= v <= p for v in idx):
            raise ParseError(path, lineno, f"node index out of range 1..{p}")
        sets.append(frozenset(v - 1 for v in idx))
    return sets


def write_interventions(path, interventions: Iterable[Iterable[int]]) -> None:
    lines = [";".join(str(v + 1) for v in sorted(s)) for s in interventions]
    Path(path).write_text("".join(line + "\n" for line in lines))


def read_dataset(path, interventions=None, header: bool = False) -> Dataset:
    X = read_data(path, header=header)
    ivs = None
    if interventions is not None:
        ivs = read_interventions(interventions, X.shape[0], X.shape[1])
    return Dataset(X, ivs)


def read_order(path, p: Optional[int] = None) -> Permutation:
    text = Path(path).read_text()
    try:
        order = [int(tok) for tok in re.split(r"[\s,;]+", text.strip()) if tok]
    except ValueError:
        raise ParseError(path, None, "order must be a list of integers") from None
    if p is not None and len(order) != p:
        raise ParseError(path, None, f"expected {p} entries, found {len(order)}")
    try:
        return Permutation.from_one_based(order)
    except ArcsError as exc:
        raise ParseError(path, None, str(exc)) from None


def write_order(path, perm: Permutation) -> None:
    Path(path).write_text(" ".join(str(v) for v in perm.one_based()) + "\n")


def write_trace(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "temp", "f_proposed", "accepted", "f_best"])
        for i, temp, f_prop, acc, f_best in trace.rows():
            w.writerow([i, _num(temp), _num(f_prop), int(acc), _num(f_best)])


def write_bic_report(path, records: Sequence, selected=None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["gamma", "lambda", "bic", "n_edges", "neg_loglik", "selected"])
        for r in records:
            chosen = selected is not None and (r.gamma, r.lam) == (selected.gamma, selected.lam)
            w.writerow([_num(r.gamma), _num(r.lam), _num(r.bic), r.n_edges,
                        _num(r.loglik), int(chosen)])


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
