import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arcs.core import (
    ArcsError,
    CycleError,
    Dataset,
    EmptyStratumError,
    InvalidFactorError,
    Permutation,
    WeightedDag,
    check_factor,
    extract_weighted_dag,
    factor_from_dag,
    permute_covariance,
    reproject_factor,
    sample_covariance,
    topological_sort,
)


def random_weighted_dag(p, rng, density=0.4):
    order = rng.permutation(p)
    B = np.zeros((p, p))
    for a in range(p):
        for b in range(a + 1, p):
            if rng.random() < density:
                B[order[a], order[b]] = rng.uniform(0.3, 1.5) * rng.choice([-1, 1])
    return WeightedDag(B, rng.uniform(0.5, 2.0, size=p))


def random_spd(p, rng):
    A = rng.standard_normal((p, p + 3))
    return A @ A.T / (p + 3) + 0.1 * np.eye(p)


# --- Permutation ---------------------------------------------------------


def test_permutation_rejects_non_bijection():
    with pytest.raises(ArcsError):
        Permutation(np.array([0, 0, 2]))
    with pytest.raises(ArcsError):
        Permutation.from_one_based([0, 1, 2])


def test_permutation_one_based_round_trip():
    P = Permutation.from_one_based([3, 1, 2])
    assert P.one_based() == [3, 1, 2]
    assert list(P.order) == [2, 0, 1]


def test_permutation_matrix_action():
    P = Permutation.from_one_based([3, 1, 2])
    v = np.array([10.0, 20.0, 30.0])
    assert np.array_equal(P.matrix() @ v, P.apply(v))
    assert np.array_equal(P.apply(v), [30.0, 10.0, 20.0])


@settings(max_examples=100, deadline=None)
@given(st.permutations(list(range(7))))
def test_permutation_inverse_restores(order):
    P = Permutation(np.array(order))
    v = np.arange(7.0) * 1.5
    assert np.array_equal(P.inverse().apply(P.apply(v)), v)
    assert P.inverse().inverse() == P
    assert np.array_equal(P.positions()[P.order], np.arange(7))


# --- WeightedDag / topological sort --------------------------------------


def test_dag_rejects_self_loop_and_cycle():
    with pytest.raises(ArcsError):
        WeightedDag(np.array([[1.0, 0], [0, 0]]))
    with pytest.raises(CycleError):
        WeightedDag.from_edges(2, [(0, 1), (1, 0)])


def test_dag_rejects_nonpositive_variance():
    with pytest.raises(ArcsError):
        WeightedDag(np.zeros((2, 2)), [1.0, 0.0])


def test_topological_sort_empty_graph_is_identity():
    g = WeightedDag(np.zeros((3, 3)))
    assert topological_sort(g).one_based() == [1, 2, 3]


def test_topological_sort_chain_children_first():
    g = WeightedDag.from_edges(3, [(0, 1), (1, 2)])
    assert topological_sort(g).one_based() == [3, 2, 1]


def test_topological_sort_cycle_raises():
    B = np.zeros((2, 2))
    B[0, 1] = B[1, 0] = 1.0
    with pytest.raises(CycleError) as info:
        topological_sort(WeightedDag(B, check=False))
    assert info.value.code == "E_CYCLE"


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 9), st.integers(0, 2**31 - 1))
def test_topological_sort_gives_strictly_lower(p, seed):
    g = random_weighted_dag(p, np.random.default_rng(seed))
    M = topological_sort(g).matrix()
    PBP = M @ g.coefficients @ M.T
    assert np.all(np.triu(PBP) == 0)


# --- covariance ----------------------------------------------------------


def test_sample_covariance_identity_rows():
    assert np.allclose(sample_covariance(np.eye(2)), [[0.5, 0], [0, 0.5]])


def test_sample_covariance_single_row_is_outer_product():
    r = np.array([1.0, -2.0, 3.0])
    assert np.allclose(sample_covariance(r[None, :]), np.outer(r, r))


def test_sample_covariance_matches_loop():
    X = np.random.default_rng(0).standard_normal((50, 4))
    S = np.zeros((4, 4))
    for row in X:
        S += np.outer(row, row)
    assert np.max(np.abs(sample_covariance(X) - S / 50)) <= 1e-12


def test_sample_covariance_row_subset_and_empty():
    X = np.random.default_rng(1).standard_normal((10, 3))
    rows = np.array([0, 4, 7])
    assert np.allclose(sample_covariance(X, rows), X[rows].T @ X[rows] / 3)
    with pytest.raises(EmptyStratumError):
        sample_covariance(X, np.array([], dtype=int))


def test_permute_covariance_examples():
    S = np.array([[1.0, 2.0], [2.0, 3.0]])
    assert np.array_equal(permute_covariance(Permutation.identity(2), S), S)
    swap = Permutation.from_one_based([2, 1])
    assert np.array_equal(permute_covariance(swap, S), [[3.0, 2.0], [2.0, 1.0]])


@settings(max_examples=50, deadline=None)
@given(st.permutations(list(range(5))), st.integers(0, 2**31 - 1))
def test_permute_covariance_properties(order, seed):
    S = random_spd(5, np.random.default_rng(seed))
    P = Permutation(np.array(order))
    M = P.matrix()
    T = permute_covariance(P, S)
    assert np.allclose(T, M @ S @ M.T)
    assert np.allclose(permute_covariance(P.inverse(), T), S)
    assert np.allclose(np.linalg.eigvalsh(T), np.linalg.eigvalsh(S), atol=1e-10)


# --- factors and extraction ----------------------------------------------


def test_check_factor_rejects_bad_input():
    with pytest.raises(InvalidFactorError):
        check_factor(np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(InvalidFactorError):
        check_factor(np.array([[1.0, 0.0], [0.5, 0.0]]))


def test_extract_identity_factor_gives_empty_graph():
    P = Permutation.from_one_based([2, 3, 1])
    g = extract_weighted_dag(P, np.eye(3))
    assert g.n_edges == 0
    assert np.allclose(g.noise_variances, 1.0)


def test_extract_two_node_example():
    # column 1 of L is (1, -0.5): node 2 is a parent of node 1 with weight 0.5
    L = np.array([[1.0, 0.0], [-0.5, 2.0]])
    g = extract_weighted_dag(Permutation.identity(2), L)
    assert g.coefficients[0, 1] == 0
    assert g.coefficients[1, 0] == pytest.approx(0.5)
    assert np.allclose(g.noise_variances, [1.0, 0.25])


def test_extract_matches_structural_equation_oracle():
    # the factor of the precision matrix: (I - B) Omega^-1 (I - B)^T = P^T L L^T P
    rng = np.random.default_rng(3)
    g = random_weighted_dag(6, rng, 0.5)
    P = topological_sort(g)
    L = factor_from_dag(g, P)
    IB = np.eye(6) - g.coefficients
    K = IB @ np.diag(1 / g.noise_variances) @ IB.T
    M = P.matrix()
    assert np.allclose(M.T @ L @ L.T @ M, K, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 10), st.integers(0, 2**31 - 1))
def test_extract_round_trip(p, seed):
    g = random_weighted_dag(p, np.random.default_rng(seed))
    P = topological_sort(g)
    h = extract_weighted_dag(P, factor_from_dag(g, P))
    assert np.max(np.abs(h.coefficients - g.coefficients)) <= 1e-12
    assert np.max(np.abs(h.noise_variances - g.noise_variances)) <= 1e-12


def test_factor_from_dag_rejects_incompatible_order():
    g = WeightedDag.from_edges(2, [(0, 1)])
    with pytest.raises(ArcsError):
        factor_from_dag(g, Permutation.identity(2))


def test_reproject_factor_keeps_lower_and_floors_diag():
    L = np.array([[1.0, 0, 0], [0.4, 2.0, 0], [0.2, -0.3, 0.5]])
    P = Permutation.identity(3)
    Q = Permutation.from_one_based([1, 3, 2])
    R = reproject_factor(L, P, Q)
    assert np.all(np.triu(R, 1) == 0)
    assert np.all(np.diag(R) >= 1e-3)
    assert np.allclose(reproject_factor(L, P, P), L)


# --- Dataset -------------------------------------------------------------


def test_dataset_partitions():
    X = np.zeros((4, 3))
    ds = Dataset(X, [frozenset(), {0}, {0, 2}, ()])
    assert ds.is_experimental
    for j in range(3):
        assert ds.observed_rows(j).size + ds.intervened_rows(j).size == 4
    assert list(ds.intervened_rows(0)) == [1, 2]


def test_dataset_rejects_bad_interventions():
    with pytest.raises(ArcsError):
        Dataset(np.zeros((2, 2)), [{5}, set()])
    with pytest.raises(ArcsError):
        Dataset(np.zeros((2, 2)), [set()])


def test_dataset_standardized_and_centered():
    X = np.random.default_rng(2).normal(3.0, 2.0, size=(200, 3))
    Z = Dataset(X).standardized().data
    assert np.allclose(Z.mean(axis=0), 0, atol=1e-12)
    assert np.allclose(Z.std(axis=0), 1)
    assert np.allclose(Dataset(X).centered().data.mean(axis=0), 0, atol=1e-12)
