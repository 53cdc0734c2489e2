"""Utility accounting for private trees and the distance/similarity studies."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .cost import clique_cost
from .graph import Graph, RatingsMatrix, all_pairs_hops
from .recommend import Prediction, SocialFn

SIMILARITY = "cosine"


def loss_bound(K: int, epsilon: float, rho: float) -> float:
    """Concentration bound on the expected cost gap: ``(2K/eps)(3/2 + 6/sqrt(K)) rho``."""
    if not epsilon > 0 or K < 1:
        raise ValueError("need epsilon > 0 and K >= 1")
    return (2 * K / epsilon) * (1.5 + 6 / math.sqrt(K)) * rho


@dataclass(frozen=True)
class UtilityReport:
    cost_dp: float
    cost_nondp: float
    rho: float
    empirical_loss: float
    relative_utility: float
    bound: float

    def to_dict(self) -> dict:
        return asdict(self)


def utility_report(run_dp, run_nondp, K: int, epsilon: float) -> UtilityReport:
    """Compare a private and a non-private run on the true dissimilarities.

    The runs may be :class:`~privhct.pipeline.PrivactRun` objects or
    ``(n, cost_on_true_S)`` pairs.
    """
    n_dp, c_dp = _run_cost(run_dp)
    n_nd, c_nd = _run_cost(run_nondp)
    if n_dp != n_nd:
        raise ValueError(f"runs over different vertex counts ({n_dp} vs {n_nd})")
    rho = clique_cost(n_dp)
    return UtilityReport(
        cost_dp=c_dp, cost_nondp=c_nd, rho=rho,
        empirical_loss=abs(c_dp - c_nd) / c_nd,
        relative_utility=c_nd / rho,
        bound=loss_bound(K, epsilon, rho),
    )


def _run_cost(run) -> tuple[int, float]:
    if hasattr(run, "metadata"):
        return run.metadata.n, run.metadata.cost_true
    n, cost = run
    return int(n), float(cost)


def pearson(x, y) -> float:
    """Pearson correlation, ``nan`` when either side has no variance or fewer than 2 points."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("inputs differ in length")
    if len(x) < 2:
        return math.nan
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx <= 0 or syy <= 0:
        return math.nan
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def _check_mode(mode: str) -> None:
    if mode not in ("partial", "full"):
        raise ValueError(f"mode must be 'partial' or 'full', got {mode!r}")


def profile_similarity(ratings: RatingsMatrix, u: int, v: int, mode: str = "full") -> float:
    """Cosine similarity of two users' rating profiles.

    ``partial`` uses only the items both users rated (``nan`` when there
    are none); ``full`` treats unrated items as 0 (``nan`` when a profile is
    empty).
    """
    _check_mode(mode)
    if u == v:
        raise ValueError("similarity of a user with itself")
    return float(similarity_row(ratings.to_csr(), u, mode)[v])


def row_norms(csr) -> np.ndarray:
    return np.sqrt(np.asarray(csr.multiply(csr).sum(axis=1)).ravel())


def similarity_row(csr, u: int, mode: str, norms: np.ndarray | None = None) -> np.ndarray:
    """Similarities of user ``u`` to every user (``nan`` where undefined).

    ``norms`` optionally supplies :func:`row_norms` for the full mode.
    """
    _check_mode(mode)
    lo, hi = csr.indptr[u], csr.indptr[u + 1]
    items = csr.indices[lo:hi]
    vals = csr.data[lo:hi]
    sub = csr[:, items]
    dot = sub @ vals
    with np.errstate(invalid="ignore", divide="ignore"):
        if mode == "full":
            norm_u = math.sqrt(float(np.dot(vals, vals)))
            norms = row_norms(csr) if norms is None else norms
            out = dot / (norm_u * norms)
        else:
            pattern = sub.copy()
            pattern.data[:] = 1.0
            # squared norms restricted to the co-rated items
            own = pattern @ (vals * vals)
            other = np.asarray(sub.multiply(sub).sum(axis=1)).ravel()
            out = dot / np.sqrt(own * other)
            out[np.asarray(pattern.sum(axis=1)).ravel() == 0] = np.nan
    out = np.where(np.isfinite(out), out, np.nan)
    return out


@dataclass
class CorrelationSummary:
    mode: str
    per_user: dict
    negative_fraction: float
    min_r: float
    max_r: float
    skipped: int
    undefined: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("per_user")
        d["users"] = len(self.per_user)
        d["similarity"] = SIMILARITY
        return d


def distance_similarity_correlation(g: Graph, ratings: RatingsMatrix, mode: str = "full",
                                    min_pairs: int = 3, hops: np.ndarray | None = None) -> CorrelationSummary:
    """Per-user Pearson ``r`` between hop distance and profile similarity.

    For each user, every other reachable user with a defined similarity is a
    pair. Users with fewer than ``min_pairs`` pairs are skipped; users whose
    ``r`` is undefined are counted but excluded from the summary.
    """
    _check_mode(mode)
    if ratings.n_users != g.n:
        raise ValueError("ratings and graph cover different user sets")
    hops = all_pairs_hops(g) if hops is None else hops
    csr = ratings.to_csr()
    norms = row_norms(csr)
    per_user = {}
    skipped = undefined = 0
    for u in range(g.n):
        if csr.indptr[u + 1] == csr.indptr[u]:
            skipped += 1
            continue
        sim = similarity_row(csr, u, mode, norms)
        d = hops[u]
        ok = np.isfinite(d) & ~np.isnan(sim)
        ok[u] = False
        if ok.sum() < min_pairs:
            skipped += 1
            continue
        r = pearson(d[ok], sim[ok])
        if math.isnan(r):
            undefined += 1
            continue
        per_user[u] = r
    rs = np.array(list(per_user.values()))
    if len(rs) == 0:
        return CorrelationSummary(mode, per_user, math.nan, math.nan, math.nan, skipped, undefined)
    return CorrelationSummary(mode, per_user, float((rs < 0).mean()), float(rs.min()),
                              float(rs.max()), skipped, undefined)


def path_profile(target: int, items, community, raters_by_item, hops: np.ndarray) -> np.ndarray:
    """Mean hop distance from ``target`` to the community members who rated
    each item, in item order. Items without such a finite distance are left out.

    ``raters_by_item`` is an items-major sparse matrix (CSC of users x items).
    """
    members = np.zeros(len(hops), dtype=bool)
    members[np.asarray(community, dtype=np.int64)] = True
    out = []
    for item in items:
        raters = raters_by_item.indices[raters_by_item.indptr[item]:raters_by_item.indptr[item + 1]]
        raters = raters[members[raters]]
        d = hops[target, raters]
        d = d[np.isfinite(d)]
        if len(d):
            out.append(float(d.mean()))
    return np.array(out)


def ndcg_path_correlation(g: Graph, predictions: list[Prediction], communities: SocialFn,
                          train: RatingsMatrix, ndcg: dict, hops: np.ndarray | None = None) -> float:
    """Pearson ``r`` across users between NDCG and the mean of their path profile.

    ``ndcg`` maps user to score. Users with an empty profile are skipped;
    the result is ``nan`` when undefined.
    """
    hops = all_pairs_hops(g) if hops is None else hops
    csc = train.to_csr().tocsc()
    x, y = [], []
    for p in predictions:
        prof = path_profile(p.user, p.items, communities.neighbors[p.user], csc, hops)
        if len(prof) and p.user in ndcg:
            x.append(ndcg[p.user])
            y.append(float(prof.mean()))
    return pearson(x, y)
