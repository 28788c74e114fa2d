import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arcs.core import ArcsError, DimensionError, WeightedDag
from arcs.metrics import (
    EvalCounts,
    Pdag,
    compare_experimental,
    compare_observational,
    dag_to_cpdag,
)
from oracles import brute_force_cpdags


def dag(p, edges):
    return WeightedDag.from_edges(p, edges)


def random_dag(p, rng, density):
    order = rng.permutation(p)
    edges = [(order[a], order[b]) for a in range(p) for b in range(a + 1, p)
             if rng.random() < density]
    return dag(p, edges)


# --- CPDAG ---------------------------------------------------------------


def test_cpdag_examples():
    assert dag_to_cpdag(dag(3, [])).n_edges == 0
    cp = dag_to_cpdag(dag(2, [(0, 1)]))
    assert cp.undirected == {(0, 1)} and not cp.directed
    cp = dag_to_cpdag(dag(3, [(0, 2), (1, 2)]))
    assert cp.directed == {(0, 2), (1, 2)} and not cp.undirected


def test_cpdag_meek_propagation():
    # 1 -> 3 <- 2, 3 -> 4: the v-structure compels 3 -> 4 by R1
    cp = dag_to_cpdag(dag(4, [(0, 2), (1, 2), (2, 3)]))
    assert cp.directed == {(0, 2), (1, 2), (2, 3)}


@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_cpdag_matches_enumeration(p):
    count = 0
    for A, expected in brute_force_cpdags(p):
        got = dag_to_cpdag(WeightedDag(A.astype(float)))
        assert got == expected, (A.astype(int), got, expected)
        count += 1
    assert count == {1: 1, 2: 3, 3: 25, 4: 543}[p]


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2**31 - 1))
def test_cpdag_invariant_to_relabeling(p, seed):
    rng = np.random.default_rng(seed)
    g = random_dag(p, rng, 0.5)
    perm = rng.permutation(p)
    h = dag(p, [(perm[i], perm[j]) for i, j in g.edges])
    cg, ch = dag_to_cpdag(g), dag_to_cpdag(h)
    assert {(perm[i], perm[j]) for i, j in cg.directed} == set(ch.directed)
    assert {tuple(sorted((perm[i], perm[j]))) for i, j in cg.undirected} == set(ch.undirected)


def test_pdag_validation():
    with pytest.raises(ArcsError):
        Pdag(2, frozenset({(0, 1)}), frozenset({(0, 1)}))
    with pytest.raises(ArcsError):
        Pdag(2, frozenset({(0, 0)}), frozenset())


# --- counts --------------------------------------------------------------


def test_observational_examples():
    truth = dag(3, [(0, 1), (1, 2)])
    c = compare_observational(truth, truth)
    assert (c.TP, c.R, c.FP, c.M, c.SHD, c.JI) == (2, 0, 0, 0, 0, 1.0)
    est = dag(3, [(0, 1), (2, 1)])
    c = compare_observational(est, truth)
    assert (c.TP, c.R, c.FP, c.M, c.SHD) == (1, 1, 0, 0, 1)
    assert c.JI == pytest.approx(1 / 3)
    c = compare_observational(dag(3, []), truth)
    assert (c.SHD, c.JI) == (2, 0.0)


def test_observational_reversed_reversible_edge_is_tp():
    c = compare_observational(dag(2, [(1, 0)]), dag(2, [(0, 1)]))
    assert (c.TP, c.R, c.SHD) == (1, 0, 0)


def test_observational_accepts_pdag_estimate():
    truth = dag(3, [(0, 1), (1, 2)])
    est = Pdag(3, frozenset(), frozenset({(0, 1), (1, 2)}))
    c = compare_observational(est, truth)
    assert (c.TP, c.SHD) == (2, 0)


def test_experimental_examples():
    truth = dag(2, [(0, 1)])
    c = compare_experimental(truth, truth)
    assert (c.SHD, c.JI) == (0, 1.0)
    c = compare_experimental(dag(2, [(1, 0)]), truth)
    assert (c.P, c.R, c.FP, c.M, c.TP, c.SHD, c.JI) == (1, 1, 0, 0, 0, 1, 0.0)
    truth = dag(4, [(0, 1), (1, 2), (2, 3)])
    est = dag(4, [(1, 0), (2, 3), (0, 3)])  # reversed, missing 1->2, spurious 0->3
    c = compare_experimental(est, truth)
    assert (c.R, c.M, c.FP, c.SHD) == (1, 1, 1, 3)


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        compare_experimental(dag(2, []), dag(3, []))
    with pytest.raises(DimensionError):
        compare_observational(dag(2, []), dag(3, []))


def test_collider_graphs_count_the_same():
    truth = dag(4, [(0, 3), (1, 3), (2, 3)])
    est = dag(4, [(0, 3), (1, 3), (3, 2)])
    assert compare_observational(est, truth) == compare_experimental(est, truth)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_count_identities(p, seed):
    rng = np.random.default_rng(seed)
    truth = random_dag(p, rng, rng.random())
    est = random_dag(p, rng, rng.random())
    s0 = truth.n_edges
    for c in (compare_observational(est, truth), compare_experimental(est, truth)):
        assert c.R == c.P - c.TP - c.FP
        assert c.SHD == c.R + c.FP + c.M
        denom = s0 + c.P - c.TP
        assert c.JI == (c.TP / denom if denom else 1.0)
        assert 0 <= c.JI <= 1 and 0 <= c.SHD <= s0 + c.P


def test_eval_counts_rejects_inconsistent_values():
    with pytest.raises(AssertionError):
        EvalCounts(3, 1, 1, 0, 0, 1, 0.5)
