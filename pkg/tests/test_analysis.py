import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from privhct import analysis
from privhct.analysis import (
    distance_similarity_correlation, loss_bound, ndcg_path_correlation, pearson,
    profile_similarity, utility_report,
)
from privhct.graph import Graph, RatingsMatrix, all_pairs_hops
from privhct.recommend import Prediction, SocialFn

from oracles import cosine, floyd_warshall, pearson as pearson_oracle


def ratings_from(d, n_users, n_items):
    keys = sorted(d)
    return RatingsMatrix(n_users, n_items, np.array([u for u, _ in keys]), np.array([i for _, i in keys]),
                         np.array([d[k] for k in keys], dtype=float), np.arange(n_items))


def test_identical_runs_zero_loss():
    rep = utility_report((10, 500.0), (10, 500.0), K=3, epsilon=1.0)
    assert rep.empirical_loss == 0.0
    assert rep.rho == 330.0
    assert rep.relative_utility == pytest.approx(500 / 330)


def test_report_fields():
    rep = utility_report((10, 450.0), (10, 500.0), K=4, epsilon=0.5)
    assert rep.empirical_loss == pytest.approx(0.1)
    assert rep.bound == pytest.approx((2 * 4 / 0.5) * (1.5 + 6 / 2) * 330)
    assert rep.bound == loss_bound(4, 0.5, 330)


def test_report_mismatched_n():
    with pytest.raises(ValueError):
        utility_report((10, 1.0), (11, 1.0), 3, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=30),
       st.floats(-50, 50).filter(lambda a: abs(a) > 1e-3), st.floats(-50, 50))
def test_pearson_affine(xs, a, b):
    x = np.array(xs)
    assume(np.ptp(x) > 1e-3)
    assert pearson(x, a * x + b) == pytest.approx(math.copysign(1, a), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=3, max_size=30))
def test_pearson_bounded_and_matches_oracle(pairs):
    x, y = map(np.array, zip(*pairs))
    r = pearson(x, y)
    if math.isnan(r):
        assert np.ptp(x) == 0 or np.ptp(y) == 0
        return
    assert -1 <= r <= 1
    if np.std(x) > 1e-3 and np.std(y) > 1e-3:
        assert r == pytest.approx(pearson_oracle(x, y), abs=1e-9)


def test_pearson_zero_variance_undefined():
    assert math.isnan(pearson([1, 1, 1], [1, 2, 3]))
    assert math.isnan(pearson([1], [2]))


def test_similarity_identical_and_orthogonal():
    r = ratings_from({(0, 0): 0.5, (0, 1): 1.0, (1, 0): 0.5, (1, 1): 1.0, (2, 2): 0.7}, 3, 3)
    assert profile_similarity(r, 0, 1, "full") == pytest.approx(1.0)
    assert profile_similarity(r, 0, 2, "full") == 0.0
    assert math.isnan(profile_similarity(r, 0, 2, "partial"))


def test_similarity_toy_oracle():
    d = {(0, 0): 1.0, (0, 1): 0.5, (0, 3): 0.2, (1, 0): 0.4, (1, 2): 0.9, (2, 1): 0.3, (2, 3): 1.0,
         (3, 0): 0.6, (3, 1): 0.6, (3, 2): 0.6, (3, 3): 0.6}
    r = ratings_from(d, 4, 4)
    dense = np.zeros((4, 4))
    for (u, i), v in d.items():
        dense[u, i] = v
    for u in range(4):
        for v in range(4):
            if u == v:
                continue
            assert profile_similarity(r, u, v, "full") == pytest.approx(cosine(dense[u], dense[v]))
            co = [i for i in range(4) if dense[u, i] > 0 and dense[v, i] > 0]
            got = profile_similarity(r, u, v, "partial")
            if co:
                assert got == pytest.approx(cosine(dense[u, co], dense[v, co]))
            else:
                assert math.isnan(got)


def test_similarity_rejects_self():
    r = ratings_from({(0, 0): 1.0}, 2, 1)
    with pytest.raises(ValueError):
        profile_similarity(r, 0, 0)
    with pytest.raises(ValueError):
        profile_similarity(r, 0, 1, "cosine")


def path_graph(n):
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def test_similarity_linear_in_distance_gives_minus_one():
    # user v at distance v from user 0 sits at angle acos(1 - 0.2 v) in a 2-item space
    n = 5
    d = {(0, 0): 1.0}
    for v in range(1, n):
        c = 1 - 0.2 * v
        d[(v, 0)] = c
        d[(v, 1)] = math.sqrt(1 - c * c)
    s = distance_similarity_correlation(path_graph(n), ratings_from(d, n, 2), "full")
    assert s.per_user[0] == pytest.approx(-1.0, abs=1e-12)


def test_six_node_correlations_match_oracle():
    rng = np.random.default_rng(4)
    edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 2), (1, 4)]
    g = Graph.from_edges(6, edges)
    d = {(u, i): float(rng.uniform(0.1, 1)) for u in range(6) for i in range(5) if rng.random() < 0.7}
    r = ratings_from(d, 6, 5)
    dense = np.zeros((6, 5))
    for (u, i), v in d.items():
        dense[u, i] = v
    hops = floyd_warshall(6, edges)
    for mode in ("full", "partial"):
        s = distance_similarity_correlation(g, r, mode)
        for u, got in s.per_user.items():
            xs, ys = [], []
            for v in range(6):
                if v == u:
                    continue
                co = [i for i in range(5) if dense[u, i] > 0 and dense[v, i] > 0] if mode == "partial" else range(5)
                if mode == "partial" and not co:
                    continue
                xs.append(hops[u, v])
                ys.append(cosine(dense[u, list(co)], dense[v, list(co)]))
            assert got == pytest.approx(pearson_oracle(xs, ys), abs=1e-9)
        rs = np.array(list(s.per_user.values()))
        assert s.negative_fraction == pytest.approx((rs < 0).mean())
        assert s.min_r == rs.min() and s.max_r == rs.max()


def test_users_with_too_few_pairs_skipped():
    g = Graph.from_edges(5, [(0, 1), (1, 2)])
    d = {(u, 0): 0.5 + 0.1 * u for u in range(5)}
    d[(3, 1)] = 1.0
    s = distance_similarity_correlation(g, ratings_from(d, 5, 2), "full")
    assert s.per_user == {}
    assert s.skipped == 5 and math.isnan(s.negative_fraction)


def test_ndcg_path_constant_scores_undefined():
    g = path_graph(4)
    train = ratings_from({(1, 0): 1.0, (2, 0): 1.0, (3, 1): 1.0}, 4, 2)
    preds = [Prediction(0, np.array([0, 1]), np.array([1.0, 0.5]))]
    social = SocialFn("hct-neighbors", [np.array([1, 2, 3])] + [np.array([0])] * 3)
    assert math.isnan(ndcg_path_correlation(g, preds, social, train, {0: 0.3}))


def test_ndcg_path_five_user_oracle():
    edges = [(0, 1), (1, 2), (2, 3), (3, 4)]
    g = Graph.from_edges(5, edges)
    hops = all_pairs_hops(g)
    train = ratings_from({(1, 0): 1.0, (2, 0): 0.5, (3, 1): 1.0, (4, 1): 0.4, (4, 2): 0.9, (0, 2): 0.2}, 5, 3)
    nb = [np.array([1, 3]), np.array([0, 4]), np.array([4, 3]), np.array([1, 2]), np.array([2, 3])]
    social = SocialFn("hct-neighbors", nb)
    preds = [Prediction(u, np.array([0, 1, 2]), np.array([3.0, 2.0, 1.0])) for u in range(5)]
    ndcg = {0: 0.1, 1: 0.4, 2: 0.2, 3: 0.9, 4: 0.5}
    xs, ys = [], []
    raters = {0: [1, 2], 1: [3, 4], 2: [0, 4]}
    for u in range(5):
        prof = []
        for item in (0, 1, 2):
            ds = [hops[u, v] for v in raters[item] if v in nb[u].tolist()]
            if ds:
                prof.append(np.mean(ds))
        if prof:
            xs.append(ndcg[u])
            ys.append(np.mean(prof))
    got = ndcg_path_correlation(g, preds, social, train, ndcg)
    assert got == pytest.approx(pearson_oracle(xs, ys), abs=1e-12)


def test_summary_records_similarity_choice():
    g = path_graph(5)
    d = {(u, i): 0.2 + 0.1 * ((u * 3 + i) % 7) for u in range(5) for i in range(3)}
    s = distance_similarity_correlation(g, ratings_from(d, 5, 3), "full")
    assert s.to_dict()["similarity"] == analysis.SIMILARITY == "cosine"
