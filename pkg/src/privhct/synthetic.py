"""Seeded synthetic social graphs and ratings with nested community structure.

Used for end-to-end smoke runs when the real datasets are not on disk.
"""

from __future__ import annotations

import numpy as np

from .graph import Graph, RatingsMatrix


def nested_communities(n: int, branching=(4, 4), mean_degree: float = 13.7,
                       locality: float = 0.85, seed: int = 0) -> tuple[Graph, np.ndarray]:
    """Graph whose edges concentrate inside nested groups.

    Vertices are split into ``prod(branching)`` leaf groups arranged in a
    hierarchy. Each edge endpoint pair is drawn inside the vertex's leaf group
    with probability ``locality``, else inside the parent group, and so on up
    to the whole graph. Returns the graph and the leaf-group label per vertex.
    """
    rng = np.random.default_rng(seed)
    groups = int(np.prod(branching))
    labels = np.sort(rng.integers(0, groups, size=n))
    # level-l group of a leaf group g is g // prod(branching[l:]) style blocks
    strides = [int(np.prod(branching[i:])) for i in range(len(branching) + 1)]
    members = {}
    for level, stride in enumerate(strides):
        key = labels // stride
        for k in np.unique(key):
            members[(level, int(k))] = np.flatnonzero(key == k)
    target = int(round(n * mean_degree / 2))
    edges = set()
    while len(edges) < target:
        u = int(rng.integers(n))
        level = len(strides) - 1
        for lv in range(len(strides)):
            if rng.random() < locality or lv == len(strides) - 1:
                level = lv
                break
        pool = members[(level, int(labels[u] // strides[level]))]
        v = int(pool[rng.integers(len(pool))])
        if u != v:
            edges.add((min(u, v), max(u, v)))
    return Graph.from_edges(n, sorted(edges)), labels


def community_ratings(labels: np.ndarray, n_items: int = 400, per_user: int = 20,
                      affinity: float = 0.8, seed: int = 0) -> RatingsMatrix:
    """Ratings where users mostly rate items owned by their own group."""
    rng = np.random.default_rng(seed)
    groups = int(labels.max()) + 1
    owner = rng.integers(0, groups, size=n_items)
    by_group = [np.flatnonzero(owner == g) for g in range(groups)]
    users, items, values = [], [], []
    for u, g in enumerate(labels):
        local = by_group[g] if len(by_group[g]) else np.arange(n_items)
        picked = set()
        for _ in range(per_user):
            pool = local if rng.random() < affinity else np.arange(n_items)
            picked.add(int(pool[rng.integers(len(pool))]))
        w = rng.pareto(1.5, size=len(picked)) + 1
        w = w / w.max()
        for it, val in zip(sorted(picked), w):
            users.append(u)
            items.append(it)
            values.append(float(val))
    return RatingsMatrix(len(labels), n_items, np.array(users), np.array(items),
                         np.array(values), np.arange(n_items))
