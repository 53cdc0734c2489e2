"""Cold-start recommenders over a social relation and their ranking metrics.

Three predictors share one scoring rule. For target ``u`` and item ``i``::

    score(u, i) = mean(i) + sum_N (r[v, i] - mean(v)) / |raters of i in N|

where ``N`` is the social neighbourhood of ``u``. ``friends`` uses graph
neighbours, ``hct-neighbors`` the ``m`` closest users in a cluster tree,
and the item-average baseline ranks by ``mean(i)`` alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from .graph import Graph, RatingsMatrix
from .tree import ClusterTree, nearest_neighbors

METHODS = ("itemavg", "friendscf", "privact-cf")
MAP_NORMALIZER = "min(|relevant|, j)"


@dataclass
class Prediction:
    """Ranked items for one user, best first."""

    user: int
    items: np.ndarray
    scores: np.ndarray
    fallback: bool = False

    @property
    def ranked_items(self) -> list[tuple[int, float]]:
        return list(zip(self.items.tolist(), self.scores.tolist()))


@dataclass
class SocialFn:
    """Per-user neighbour sets; ``kind`` is ``friends`` or ``hct-neighbors``."""

    kind: str
    neighbors: list[np.ndarray] = field(repr=False)

    def __post_init__(self):
        if self.kind not in ("friends", "hct-neighbors"):
            raise ValueError(f"unknown social kind {self.kind!r}")

    def __len__(self) -> int:
        return len(self.neighbors)


def friends(g: Graph) -> SocialFn:
    return SocialFn("friends", [np.asarray(a, dtype=np.int64) for a in g.adjacency])


def neighbor_count(noisy_degree: float, n: int) -> int:
    """Community size from a noisy degree estimate: nearest integer, kept in ``[1, n-1]``."""
    return int(min(max(math.floor(noisy_degree + 0.5), 1), n - 1))


def hct_neighbor_sets(t: ClusterTree, vectors: np.ndarray) -> SocialFn:
    """The ``m(u)`` tree-nearest users of every ``u``, ``m(u)`` estimated from its report."""
    vectors = np.asarray(vectors, dtype=np.float64)
    if len(vectors) != t.n:
        raise ValueError(f"{len(vectors)} vectors for a tree over {t.n} leaves")
    sums = vectors.sum(axis=1)
    out = []
    for u in range(t.n):
        out.append(np.array(nearest_neighbors(t, u, neighbor_count(sums[u], t.n)), dtype=np.int64))
    return SocialFn("hct-neighbors", out)


class RatingStats:
    """Training-side quantities shared by every predictor.

    ``dev`` holds ``r[v, i] - mean(v)`` on the rated entries and ``rated``
    the 0/1 pattern, both users x items.
    """

    def __init__(self, train: RatingsMatrix):
        self.n_users = train.n_users
        self.n_items = train.n_items
        counts_u = np.bincount(train.users, minlength=train.n_users)
        sums_u = np.bincount(train.users, weights=train.values, minlength=train.n_users)
        counts_i = np.bincount(train.items, minlength=train.n_items)
        sums_i = np.bincount(train.items, weights=train.values, minlength=train.n_items)
        with np.errstate(invalid="ignore", divide="ignore"):
            self.user_mean = np.where(counts_u > 0, sums_u / counts_u, np.nan)
            self.item_mean = np.where(counts_i > 0, sums_i / counts_i, np.nan)
        self.candidates = np.flatnonzero(counts_i > 0)
        shape = (train.n_users, train.n_items)
        dev = train.values - self.user_mean[train.users]
        self.dev = sps.csr_matrix((dev, (train.users, train.items)), shape=shape)
        self.rated = sps.csr_matrix(
            (np.ones(train.nnz), (train.users, train.items)), shape=shape
        )
        self.has_ratings = counts_u > 0


def _rank(user: int, items: np.ndarray, scores: np.ndarray, k: int | None, fallback=False) -> Prediction:
    # best score first, ties by ascending item id
    order = np.lexsort((items, -scores))
    if k is not None:
        order = order[:k]
    return Prediction(user, items[order], scores[order], fallback)


def item_avg_scores(stats: RatingStats, mode: str = "mean") -> np.ndarray:
    """Score of every candidate item.

    ``mean`` is the plain mean rating. ``formula`` applies the neighbour
    rule with every training user as a neighbour, which adds the mean
    rater deviation to the mean rating.
    """
    mean = stats.item_mean[stats.candidates]
    if mode == "mean":
        return mean
    if mode == "formula":
        num = np.asarray(stats.dev.sum(axis=0)).ravel()[stats.candidates]
        den = np.asarray(stats.rated.sum(axis=0)).ravel()[stats.candidates]
        return mean + num / den
    raise ValueError(f"unknown item_avg mode {mode!r}")


def item_avg(train: RatingsMatrix, targets, k: int | None = None, mode: str = "mean",
             stats: RatingStats | None = None) -> list[Prediction]:
    """Same ranking of all items with a training rating, for every target."""
    stats = stats or RatingStats(train)
    scores = item_avg_scores(stats, mode)
    base = _rank(-1, stats.candidates, scores, k)
    return [Prediction(int(u), base.items, base.scores) for u in targets]


def neighbor_cf(train: RatingsMatrix, social: SocialFn, targets, k: int | None = None,
                stats: RatingStats | None = None) -> list[Prediction]:
    """Neighbourhood predictions for each target.

    Neighbours without training ratings contribute nothing. An item no
    neighbour rated keeps its mean rating. A target with an empty
    neighbourhood gets the item-average ranking with ``fallback`` set.
    """
    stats = stats or RatingStats(train)
    targets = np.asarray(list(targets), dtype=np.int64)
    if len(targets) == 0:
        return []
    rows, cols = [], []
    for j, u in enumerate(targets):
        nb = social.neighbors[u]
        rows.append(np.full(len(nb), j))
        cols.append(nb)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    A = sps.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(targets), stats.n_users))
    cand = stats.candidates
    num = (A @ stats.dev[:, cand]).toarray()
    den = (A @ stats.rated[:, cand]).toarray()
    mean = stats.item_mean[cand]
    with np.errstate(invalid="ignore", divide="ignore"):
        scores = np.where(den > 0, mean + num / den, mean)
    fallback_scores = item_avg_scores(stats, "mean")
    out = []
    for j, u in enumerate(targets):
        if len(social.neighbors[u]) == 0:
            out.append(_rank(int(u), cand, fallback_scores, k, fallback=True))
        else:
            out.append(_rank(int(u), cand, scores[j], k))
    return out


def _hits(ranked, relevant, k: int) -> tuple[np.ndarray, int]:
    if k < 1:
        raise ValueError("k must be >= 1")
    rel = relevant if isinstance(relevant, (set, frozenset)) else set(np.asarray(relevant).tolist())
    top = list(ranked)[:k]
    return np.array([1.0 if int(x) in rel else 0.0 for x in top]), len(rel)


def ndcg_at_k(ranked, relevant, k: int) -> float:
    """Binary-relevance NDCG of the top ``k``; 0 when nothing is relevant."""
    hits, n_rel = _hits(ranked, relevant, k)
    if n_rel == 0:
        return 0.0
    discounts = 1.0 / np.log2(np.arange(2, k + 2))
    dcg = float(np.dot(hits, discounts[: len(hits)]))
    idcg = float(discounts[: min(k, n_rel)].sum())
    return dcg / idcg


def _ap_prefix(hits: np.ndarray, n_rel: int, k: int) -> np.ndarray:
    """``AP_j`` for ``j = 1..k``; ranks past the end of the list count as misses."""
    r = np.zeros(k)
    r[: len(hits)] = hits
    j = np.arange(1, k + 1)
    precision = np.cumsum(r) / j
    return np.cumsum(precision * r) / np.maximum(np.minimum(n_rel, j), 1)


def ap_at_k(ranked, relevant, k: int) -> float:
    """Average precision at cutoff ``k`` normalised by ``min(|relevant|, k)``."""
    hits, n_rel = _hits(ranked, relevant, k)
    if n_rel == 0:
        return 0.0
    return float(_ap_prefix(hits, n_rel, k)[-1])


def map_at_k(ranked, relevant, k: int) -> float:
    """Mean of ``AP_j`` over the cutoffs ``j = 1..k`` for one user."""
    hits, n_rel = _hits(ranked, relevant, k)
    if n_rel == 0:
        return 0.0
    return float(_ap_prefix(hits, n_rel, k).mean())


def user_folds(users: np.ndarray, folds: int, seed) -> list[np.ndarray]:
    """Split ``users`` into ``folds`` disjoint, near-equal random groups."""
    if folds < 2:
        raise ValueError("need at least 2 folds")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(np.asarray(users))
    return [np.sort(part) for part in np.array_split(perm, folds)]


@dataclass
class ColdStartResult:
    """Per-user rows ``(fold, method, user, ndcg, map, ap, fallback)`` plus counts."""

    rows: list[dict]
    k: int
    folds: int
    skipped_no_ratings: int
    fallbacks: dict

    def summary(self) -> dict:
        return _aggregate(self.rows)

    def per_fold(self) -> list[dict]:
        out = []
        for f in range(self.folds):
            for m, agg in _aggregate([r for r in self.rows if r["fold"] == f]).items():
                out.append({"fold": f, "method": m, **agg})
        return out


def _aggregate(rows: list[dict]) -> dict:
    out = {}
    for m in METHODS:
        sel = [r for r in rows if r["method"] == m]
        if sel:
            out[m] = {
                "ndcg": float(np.mean([r["ndcg"] for r in sel])),
                "map": float(np.mean([r["map"] for r in sel])),
                "ap": float(np.mean([r["ap"] for r in sel])),
                "users": len(sel),
            }
    return out


def cold_start(g: Graph, ratings: RatingsMatrix, k: int = 100, folds: int = 5, seed=0,
               methods=METHODS, hct: SocialFn | None = None, on_fold=None) -> ColdStartResult:
    """Cold-start cross-validation over users.

    Users are split into ``folds`` groups. Each group in turn loses all of
    its ratings from training and its rated items become the relevant set.
    Users with no ratings at all are never targets. ``on_fold(fold, train,
    predictions)`` is called after each fold with the method -> predictions map.
    """
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    if "privact-cf" in methods and hct is None:
        raise ValueError("privact-cf needs hct neighbour sets")
    if ratings.n_users != g.n:
        raise ValueError(f"ratings cover {ratings.n_users} users, graph has {g.n}")
    social = friends(g)
    csr = ratings.to_csr()
    has = np.diff(csr.indptr) > 0
    users = np.flatnonzero(has)
    rows = []
    fallbacks = {m: 0 for m in methods}
    for f, test in enumerate(user_folds(users, folds, seed)):
        mask = np.ones(ratings.n_users, dtype=bool)
        mask[test] = False
        train = ratings.select_users(mask)
        stats = RatingStats(train)
        preds = {}
        if "itemavg" in methods:
            preds["itemavg"] = item_avg(train, test, k, stats=stats)
        if "friendscf" in methods:
            preds["friendscf"] = neighbor_cf(train, social, test, k, stats=stats)
        if "privact-cf" in methods:
            preds["privact-cf"] = neighbor_cf(train, hct, test, k, stats=stats)
        if on_fold is not None:
            on_fold(f, train, preds)
        for m in methods:
            for p in preds[m]:
                rel = set(csr.indices[csr.indptr[p.user]:csr.indptr[p.user + 1]].tolist())
                fallbacks[m] += int(p.fallback)
                rows.append({
                    "fold": f, "method": m, "user": p.user,
                    "ndcg": ndcg_at_k(p.items, rel, k),
                    "map": map_at_k(p.items, rel, k),
                    "ap": ap_at_k(p.items, rel, k),
                    "fallback": int(p.fallback),
                })
    return ColdStartResult(rows, k, folds, int((~has).sum()), fallbacks)
