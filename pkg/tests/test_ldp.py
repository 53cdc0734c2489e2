import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from privhct import ldp, pipeline
from privhct.graph import Graph
from privhct.mcmc import McmcConfig

from oracles import pairwise_l1


def gnp(n, p, seed):
    rng = np.random.default_rng(seed)
    return Graph.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p])


def test_partition_identity_when_K_equals_n():
    p = ldp.random_partition(4, 4, 0)
    assert sorted(p.assignment.tolist()) == [0, 1, 2, 3]
    assert p.sizes.tolist() == [1, 1, 1, 1]


def test_partition_single_bin():
    assert ldp.random_partition(5, 1, 3).assignment.tolist() == [0] * 5


def test_partition_default_size_all_nonempty():
    K = ldp.default_bins(1843)
    assert K == 10
    p = ldp.random_partition(1843, K, 7)
    assert p.sizes.min() >= 1 and p.sizes.sum() == 1843


@pytest.mark.parametrize("K", [0, 6])
def test_partition_range_errors(K):
    with pytest.raises(ValueError):
        ldp.random_partition(5, K, 0)


def test_partition_deterministic():
    a = ldp.random_partition(50, 5, 11).assignment
    b = ldp.random_partition(50, 5, 11).assignment
    assert np.array_equal(a, b)


def test_star_center_single_bin():
    g = Graph.from_edges(5, [(0, i) for i in range(1, 5)])
    assert ldp.degree_vector(g, 0, ldp.random_partition(5, 1, 0)).tolist() == [4]


def test_isolated_vertex_zero_vector():
    g = Graph.from_edges(4, [(0, 1)])
    assert ldp.degree_vector(g, 3, ldp.random_partition(4, 3, 0)).tolist() == [0, 0, 0]


def test_degree_vector_brute_force():
    g = gnp(10, 0.4, 5)
    p = ldp.random_partition(10, 3, 2)
    for v in range(10):
        expect = [sum(1 for u in range(10) if g.has_edge(v, u) and p.assignment[u] == b) for b in range(3)]
        assert ldp.degree_vector(g, v, p).tolist() == expect


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 20), st.integers(0, 10**6), st.data())
def test_degree_vector_sums_to_degree(n, seed, data):
    K = data.draw(st.integers(1, n))
    g = gnp(n, 0.3, seed)
    vecs = ldp.degree_vectors(g, ldp.random_partition(n, K, seed))
    assert np.array_equal(vecs.sum(axis=1), g.degrees())
    assert vecs.min() >= 0


def test_vanishing_noise():
    dv = np.array([3.0, 0.0, 7.0])
    out = ldp.noise_vector(dv, 1e9, (0, 1))
    assert np.all(np.abs(out - dv) < 1e-6)


def test_noise_deterministic_and_per_user():
    dv = np.zeros(4)
    assert np.array_equal(ldp.noise_vector(dv, 1.0, (3, 9)), ldp.noise_vector(dv, 1.0, (3, 9)))
    assert not np.array_equal(ldp.noise_vector(dv, 1.0, (3, 9)), ldp.noise_vector(dv, 1.0, (3, 10)))


def test_noise_not_rounded_or_clamped():
    out = ldp.noise_vector(np.zeros(200), 0.5, (0, 0))
    assert (out < 0).any()
    assert not np.allclose(out, np.round(out))


@pytest.mark.parametrize("eps", [0.0, -1.0])
def test_noise_rejects_nonpositive_epsilon(eps):
    with pytest.raises(ValueError):
        ldp.noise_vector(np.zeros(2), eps, 0)


@pytest.mark.parametrize("eps", [1.0, 0.5])
def test_laplace_variance(eps):
    draws = ldp.noise_vector(np.zeros(10**5), eps, (42, 0))
    assert abs(draws.var() / (2 / eps**2) - 1) < 0.05


def test_clamped_identical_vectors():
    S = ldp.build_dissimilarity([[1, 2], [1, 2]])
    assert S[0, 1] == 1.0 and S[0, 0] == 0.0


def test_l1_arithmetic():
    assert ldp.build_dissimilarity([[3, 0], [0, 2]])[0, 1] == 5.0


def test_matrix_matches_pairwise_oracle():
    vecs = np.random.default_rng(3).normal(2, 3, size=(6, 4))
    np.testing.assert_allclose(ldp.build_dissimilarity(vecs), pairwise_l1(vecs.tolist()), rtol=0, atol=1e-12)


def test_mismatched_K():
    with pytest.raises(ValueError):
        ldp.build_dissimilarity([[1, 2], [1, 2, 3]])


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 5)),
              elements=st.floats(-1e6, 1e6, allow_nan=False)))
def test_dissimilarity_invariants(vecs):
    S = ldp.build_dissimilarity(vecs)
    assert ldp.is_dissimilarity(S)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10**6))
def test_exact_lists_give_degree_sum_for_disjoint_pairs(n, seed):
    g = gnp(n, 0.4, seed)
    p = ldp.BinPartition(n, np.arange(n))
    S = ldp.build_dissimilarity(ldp.degree_vectors(g, p))
    deg = g.degrees()
    for u in range(n):
        for v in range(u + 1, n):
            nu, nv = set(g.adjacency[u].tolist()), set(g.adjacency[v].tolist())
            if not g.has_edge(u, v) and not (nu & nv):
                assert S[u, v] == max(1, deg[u] + deg[v])


def test_privacy_accounting_one_report_per_user(monkeypatch):
    """Each user is noised once, and each call draws exactly one value per bin."""
    g = gnp(30, 0.2, 1)
    calls, draws = [], []
    real_noise, real_laplace = ldp.noise_vector, ldp.laplace

    def counting_noise(dv, eps, seed):
        calls.append(seed)
        return real_noise(dv, eps, seed)

    def counting_laplace(rng, scale, size):
        draws.append(size)
        return real_laplace(rng, scale, size)

    monkeypatch.setattr(ldp, "noise_vector", counting_noise)
    monkeypatch.setattr(ldp, "laplace", counting_laplace)
    run = pipeline.privact(g, 1.0, McmcConfig(max_steps=200), seed=5)
    K = run.metadata.K
    assert sorted(calls) == [(5, v) for v in range(g.n)]
    assert draws == [(K,)] * g.n
