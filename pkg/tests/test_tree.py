from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from privhct.tree import TreeError, from_nested, nearest_neighbors, parse_newick, random_tree

from oracles import nested_leaves


def test_two_leaves_unique_shape():
    t = random_tree(2, 0)
    t.validate()
    assert t.canonical() == from_nested((0, 1)).canonical()


def test_three_leaf_shapes_uniform():
    rng = np.random.default_rng(0)
    draws = 10**5
    counts = Counter(random_tree(3, rng).canonical() for _ in range(draws))
    assert len(counts) == 3
    for c in counts.values():
        assert abs(c / draws - 1 / 3) < 0.02


def test_large_tree_invariants():
    t = random_tree(1843, 4)
    t.validate()
    assert t.size[t.root] == 1843
    assert sorted(t.leaves().tolist()) == list(range(1843))


def test_random_tree_rejects_single_leaf():
    with pytest.raises(ValueError):
        random_tree(1, 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 40), st.integers(0, 10**6))
def test_newick_round_trip(n, seed):
    t = random_tree(n, seed)
    s = t.to_newick()
    u = parse_newick(s)
    assert u.to_newick() == s
    u.validate()


def test_newick_comments_ignored():
    t = parse_newick("[version: v0]\n[config: a=1,2]\n((0,1),(2,3));\n")
    assert t.to_newick() == "((0,1),(2,3));"


@pytest.mark.parametrize("bad", ["((0,1),2)", "((0,1,2),3);", "((0,2),3);", "((0,1),x);"])
def test_newick_rejects(bad):
    with pytest.raises(TreeError):
        parse_newick(bad)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 30), st.integers(0, 10**6))
def test_sizes_and_leaf_sets(n, seed):
    t = random_tree(n, seed)
    for x in range(t.num_nodes):
        assert t.size[x] == len(nested_leaves(t, x))
        assert set(t.leaves(x).tolist()) == nested_leaves(t, x)


def test_caterpillar_neighbors():
    t = from_nested((((0, 1), 2), 3))
    assert nearest_neighbors(t, 0, 3) == [1, 2, 3]


def test_balanced_neighbors_hand_walk():
    t = from_nested((((0, 1), (2, 3)), ((4, 5), (6, 7))))
    got = nearest_neighbors(t, 0, 4)
    assert got[0] == 1
    assert sorted(got[1:3]) == [2, 3]
    assert got[3] in (4, 5, 6, 7)
    assert nearest_neighbors(t, 6, 3) == [7, 4, 5]


@pytest.mark.parametrize("m", [0, 8])
def test_neighbors_range(m):
    with pytest.raises(ValueError):
        nearest_neighbors(random_tree(8, 0), 0, m)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 25), st.integers(0, 10**6), st.data())
def test_neighbors_exclude_self_and_prefix(n, seed, data):
    t = random_tree(n, seed)
    u = data.draw(st.integers(0, n - 1))
    full = nearest_neighbors(t, u, n - 1)
    assert sorted(full) == [v for v in range(n) if v != u]
    for m in range(1, n - 1):
        assert nearest_neighbors(t, u, m) == full[:m]
    # closer in the tree means a lower LCA
    depth = t.depths()
    lca_depths = [depth[t.lca(u, v)] for v in full]
    assert lca_depths == sorted(lca_depths, reverse=True)


def test_canonical_ignores_child_order():
    assert from_nested(((1, 0), (3, 2))).canonical() == from_nested(((2, 3), (0, 1))).canonical()
    assert from_nested(((0, 1), 2)).canonical() != from_nested(((0, 2), 1)).canonical()
