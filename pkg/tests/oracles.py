"""Slow, direct implementations used only to check the library.

None of these import library internals beyond the tree container, and each
follows the plainest possible definition of the quantity it computes.
"""

from __future__ import annotations

import itertools
import math
import statistics

import numpy as np


def nested_leaves(t, node):
    """Leaf set of ``node`` by recursive descent over child links."""
    if node < t.n:
        return {node}
    return nested_leaves(t, int(t.left[node])) | nested_leaves(t, int(t.right[node]))


def ancestors_of(t, node):
    out = [node]
    while t.parent[out[-1]] != -1:
        out.append(int(t.parent[out[-1]]))
    return out


def naive_lca(t, x, y):
    ax = ancestors_of(t, x)
    ay = set(ancestors_of(t, y))
    for a in ax:
        if a in ay:
            return a
    raise AssertionError("no common ancestor")


def naive_dasgupta(t, S):
    """Sum over unordered pairs of ``S[x, y]`` times the LCA's leaf count."""
    total = 0.0
    for x, y in itertools.combinations(range(t.n), 2):
        total += S[x, y] * len(nested_leaves(t, naive_lca(t, x, y)))
    return total


def naive_cross_edges(t, edges):
    """Edges between the two children's leaf sets, per internal node."""
    out = {}
    for x in range(t.n, 2 * t.n - 1):
        L = nested_leaves(t, int(t.left[x]))
        R = nested_leaves(t, int(t.right[x]))
        out[x] = sum(1 for u, v in edges if (u in L and v in R) or (u in R and v in L))
    return out


def naive_cmn(t, edges):
    total = 0.0
    counts = naive_cross_edges(t, edges)
    for x, e in counts.items():
        L = len(nested_leaves(t, int(t.left[x])))
        R = len(nested_leaves(t, int(t.right[x])))
        p = e / (L * R)
        if e > 0:
            total += e * math.log(p)
        if L * R - e > 0:
            total += (L * R - e) * math.log(1 - p)
    return total


def all_labeled_trees(n):
    """Every rooted full binary tree over leaves ``0..n-1`` as nested tuples.

    Leaf ``k`` is inserted into every edge of every tree over ``0..k-1`` and
    above the root; this produces each of the ``(2n-3)!!`` trees exactly once.
    """
    trees = [(0, 1)]
    for k in range(2, n):
        nxt = []
        for t in trees:
            nxt.extend(_insert_everywhere(t, k))
        trees = nxt
    return trees


def _insert_everywhere(t, k):
    yield (t, k)
    if isinstance(t, tuple):
        a, b = t
        for a2 in _insert_everywhere(a, k):
            yield (a2, b)
        for b2 in _insert_everywhere(b, k):
            yield (a, b2)


def double_factorial(m):
    return math.prod(range(m, 0, -2)) if m > 0 else 1


def floyd_warshall(n, edges):
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0)
    for u, v in edges:
        d[u, v] = d[v, u] = 1
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i, k] + d[k, j] < d[i, j]:
                    d[i, j] = d[i, k] + d[k, j]
    return d


def pairwise_l1(vectors):
    n = len(vectors)
    S = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                S[i, j] = max(1.0, sum(abs(a - b) for a, b in zip(vectors[i], vectors[j])))
    return S


def pearson(x, y):
    return statistics.correlation(list(map(float, x)), list(map(float, y)))


def cosine(a, b):
    num = sum(x * y for x, y in zip(a, b))
    return num / math.sqrt(sum(x * x for x in a) * sum(y * y for y in b))


def ndcg(ranked, relevant, k):
    dcg = sum(1 / math.log2(i + 2) for i, x in enumerate(ranked[:k]) if x in relevant)
    idcg = sum(1 / math.log2(i + 2) for i in range(min(k, len(relevant))))
    return dcg / idcg if idcg else 0.0


def cf_score(ratings, neighbors, item):
    """Neighbour prediction from a ``{(user, item): rating}`` dict."""
    raters = [u for (u, i) in ratings if i == item]
    item_mean = sum(ratings[(u, item)] for u in raters) / len(raters)

    def user_mean(u):
        vals = [r for (v, _), r in ratings.items() if v == u]
        return sum(vals) / len(vals)

    contrib = [ratings[(u, item)] - user_mean(u) for u in raters if u in neighbors]
    if not contrib:
        return item_mean
    return item_mean + sum(contrib) / len(contrib)
