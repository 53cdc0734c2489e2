"""Scores of a cluster tree: Dasgupta's cost, the clique baseline and log C_M.

All Dasgupta costs here sum over unordered vertex pairs, so a pair whose
lowest common ancestor holds ``s`` leaves contributes ``S(x, y) * s`` once.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .graph import Graph
from .tree import ClusterTree

PAIR_CONVENTION = "unordered"


def _check_dims(t: ClusterTree, n: int) -> None:
    if t.n != n:
        raise ValueError(f"tree has {t.n} leaves but the data has {n} vertices")


def cross_sums(t: ClusterTree, S: np.ndarray) -> np.ndarray:
    """``S_sum(left(x), right(x))`` for every node (zero on leaves).

    One post-order pass; each internal node sums the sub-block of ``S``
    between the leaf lists of its two children.
    """
    _check_dims(t, len(S))
    W = np.zeros(t.num_nodes)
    members: dict[int, np.ndarray] = {v: np.array([v]) for v in range(t.n)}
    for x in t.postorder():
        a = members.pop(int(t.left[x]))
        b = members.pop(int(t.right[x]))
        W[x] = S[np.ix_(a, b)].sum()
        members[x] = np.concatenate([a, b])
    return W


def dasgupta_cost(t: ClusterTree, S: np.ndarray) -> float:
    """``sum over pairs {x, y} of S(x, y) * |leaves(lca(x, y))|``."""
    W = cross_sums(t, S)
    return float(np.dot(t.size, W))


def clique_cost(n: int) -> float:
    """Dasgupta cost of any tree over ``n`` vertices with all dissimilarities 1."""
    if n < 2:
        raise ValueError("clique cost needs n >= 2")
    return (n**3 - n) / 3


def theta(t: ClusterTree, S: np.ndarray) -> np.ndarray:
    """Average cross dissimilarity ``S_sum(L, R) / (|L| |R|)`` per internal node.

    Leaves get ``nan``.
    """
    W = cross_sums(t, S)
    out = np.full(t.num_nodes, np.nan)
    ids = t.internal_nodes()
    out[ids] = W[ids] / (t.size[t.left[ids]] * t.size[t.right[ids]])
    return out


def edge_counts(t: ClusterTree, g: Graph) -> np.ndarray:
    """Edges crossing each internal node (each edge assigned to its endpoints' LCA)."""
    _check_dims(t, g.n)
    e = g.edges()
    if len(e) == 0:
        return np.zeros(t.num_nodes, dtype=np.int64)
    return _kernels.edge_lca_counts(
        t.n, t.root, t.left, t.right, t.parent,
        np.ascontiguousarray(e[:, 0]), np.ascontiguousarray(e[:, 1]),
    )


def cmn_log_cost(t: ClusterTree, g: Graph) -> float:
    """Log-likelihood of ``g`` under the hierarchical random graph ``t``.

    With ``pi = E / (L * R)`` at every internal node, returns the sum of
    ``E log pi + (L R - E) log(1 - pi)``, using ``0 log 0 = 0``.
    """
    E = edge_counts(t, g)
    ids = t.internal_nodes()
    pairs = (t.size[t.left[ids]] * t.size[t.right[ids]]).astype(np.float64)
    e = E[ids].astype(np.float64)
    pi = e / pairs
    with np.errstate(divide="ignore", invalid="ignore"):
        hit = np.where(e > 0, e * np.log(pi), 0.0)
        miss = np.where(pairs - e > 0, (pairs - e) * np.log1p(-pi), 0.0)
    return float(hit.sum() + miss.sum())
