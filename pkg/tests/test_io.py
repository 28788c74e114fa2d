import json

import numpy as np
import pytest

from arcs import io
from arcs.anneal import AnnealTrace
from arcs.core import Permutation, WeightedDag
from arcs.score import McpParams
from arcs.select import BicRecord


def test_edge_list_round_trip(tmp_path):
    B = np.zeros((4, 4))
    B[0, 1], B[1, 3], B[2, 3] = 0.7, -0.55, 1 / 3
    g = WeightedDag(B, [1.0, 0.5, 2.0, 0.25])
    path = tmp_path / "g.edges"
    io.write_edge_list(path, g)
    h = io.read_edge_list(path)
    assert np.array_equal(h.coefficients, g.coefficients)
    assert np.array_equal(h.noise_variances, g.noise_variances)
    assert path.read_text().splitlines()[:2] == ["# p=4", "1 2 0.7"]


def test_edge_list_without_weights_or_omega(tmp_path):
    path = tmp_path / "g.edges"
    path.write_text("# p=3\n1 2\n\n2 3\n")
    g = io.read_edge_list(path)
    assert g.edges == [(0, 1), (1, 2)]
    assert np.all(g.noise_variances == 1)


@pytest.mark.parametrize("text,line", [
    ("1 2 0.5\n", 1),
    ("# p=3\n1 4 0.5\n", 2),
    ("# p=3\n1 1 0.5\n", 2),
    ("# p=3\n1 x 0.5\n", 2),
    ("# p=3\n1 2 0\n", 2),
    ("# p=2\n1 2\n2 1\n", None),
    ("", None),
])
def test_edge_list_errors(tmp_path, text, line):
    path = tmp_path / "bad.edges"
    path.write_text(text)
    with pytest.raises(io.ParseError) as info:
        io.read_edge_list(path)
    assert info.value.code == "E_PARSE"
    if line is not None:
        assert f":{line}:" in str(info.value)


def test_data_round_trip(tmp_path):
    X = np.random.default_rng(0).standard_normal((7, 3))
    path = tmp_path / "d.csv"
    io.write_data(path, X)
    assert np.array_equal(io.read_data(path), X)


def test_data_header_and_errors(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,b\n1,2\n3,4\n")
    assert io.read_data(path, header=True).shape == (2, 2)
    with pytest.raises(io.ParseError, match=":1:"):
        io.read_data(path)
    path.write_text("1,2\n3\n")
    with pytest.raises(io.ParseError, match=":2:"):
        io.read_data(path)


def test_interventions_round_trip(tmp_path):
    ivs = [frozenset(), frozenset({0}), frozenset({1, 2})]
    path = tmp_path / "i.csv"
    io.write_interventions(path, ivs)
    assert path.read_text() == "\n1\n2;3\n"
    assert io.read_interventions(path, 3, 3) == ivs


def test_interventions_errors(tmp_path):
    path = tmp_path / "i.csv"
    path.write_text("1\n4\n")
    with pytest.raises(io.ParseError, match=":2:"):
        io.read_interventions(path, 2, 3)
    with pytest.raises(io.ParseError):
        io.read_interventions(path, 3, 5)


def test_order_round_trip(tmp_path):
    P = Permutation.from_one_based([3, 1, 2])
    path = tmp_path / "o.txt"
    io.write_order(path, P)
    assert io.read_order(path, 3) == P
    path.write_text("1 1 2")
    with pytest.raises(io.ParseError):
        io.read_order(path)


def test_reports(tmp_path):
    tr = AnnealTrace()
    tr.append(0, 1.0, 5.0, True, 5.0, 5.0)
    tr.append(1, 0.5, 6.0, False, 5.0, 5.0)
    io.write_trace(tmp_path / "t.csv", tr)
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iter,temp,f_proposed,accepted,f_best"
    assert lines[2] == "1,0.5,6.0,0,5.0"

    recs = [BicRecord(2.0, 1.0, 10.0, 3, 4.0), BicRecord(2.0, 2.0, 9.0, 1, 4.5)]
    io.write_bic_report(tmp_path / "b.csv", recs, McpParams(2.0, 2.0))
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == "gamma,lambda,bic,n_edges,neg_loglik,selected"
    assert lines[2].endswith(",1") and lines[1].endswith(",0")

    io.write_json(tmp_path / "r.json", {"b": 1, "a": [1, 2]})
    assert json.loads((tmp_path / "r.json").read_text()) == {"a": [1, 2], "b": 1}
