"""User-side degree-vector protocol and the aggregator's dissimilarity matrix.

Each user learns the random bin assignment, counts its neighbours per bin,
adds Laplace noise of scale ``1/epsilon`` to every count and reports the
vector once. The aggregator turns the reports into pairwise L1 distances,
floored at 1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph

_log = logging.getLogger(__name__)

DENSE_WARN_N = 20_000


@dataclass(frozen=True)
class BinPartition:
    K: int
    assignment: np.ndarray

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.K)


def default_bins(n: int) -> int:
    """``floor(log2 n)``, at least 1."""
    if n < 2:
        return 1
    return max(1, int(math.floor(math.log2(n))))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, (tuple, list)):
        return np.random.default_rng(np.random.SeedSequence([int(s) for s in seed]))
    return np.random.default_rng(seed)


def random_partition(n: int, K: int, seed) -> BinPartition:
    """Uniform assignment of ``n`` vertices to ``K`` bins with no bin empty.

    A random permutation supplies one guaranteed member per bin; the rest of
    the vertices pick a bin uniformly. For ``K == n`` this is a random
    bijection and for ``K == 1`` everything lands in bin 0.
    """
    if not 1 <= K <= n:
        raise ValueError(f"need 1 <= K <= n, got K={K}, n={n}")
    rng = _rng(seed)
    perm = rng.permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    assignment[perm[:K]] = np.arange(K)
    assignment[perm[K:]] = rng.integers(0, K, size=n - K)
    return BinPartition(K, assignment)


def degree_vector(g: Graph, v: int, p: BinPartition) -> np.ndarray:
    """Neighbour counts of ``v`` per bin (int64, length ``K``)."""
    if not 0 <= v < g.n:
        raise ValueError(f"vertex {v} out of range")
    return np.bincount(p.assignment[g.adjacency[v]], minlength=p.K).astype(np.int64)


def degree_vectors(g: Graph, p: BinPartition) -> np.ndarray:
    """All exact degree vectors as an ``n x K`` int64 matrix."""
    out = np.zeros((g.n, p.K), dtype=np.int64)
    for v in range(g.n):
        out[v] = degree_vector(g, v, p)
    return out


def laplace(rng: np.random.Generator, scale: float, size) -> np.ndarray:
    """Laplace(0, scale) by inverting the CDF of a uniform on (-1/2, 1/2)."""
    u = rng.random(size) - 0.5
    # rng.random is in [0, 1): u == -0.5 would give log(0)
    u = np.where(u == -0.5, np.nextafter(-0.5, 0.0), u)
    return -scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def noise_vector(dv, epsilon: float, seed) -> np.ndarray:
    """Add i.i.d. Laplace(1/epsilon) noise to every bin of ``dv``.

    ``seed`` may be an int, a sequence such as ``(global_seed, vertex)`` or a
    Generator. Results are never rounded or clipped.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    dv = np.asarray(dv, dtype=np.float64)
    return dv + laplace(_rng(seed), 1.0 / epsilon, dv.shape)


def noise_vectors(vectors: np.ndarray, epsilon: float, seed: int) -> np.ndarray:
    """One :func:`noise_vector` call per user, seeded by ``(seed, user)``."""
    out = np.empty(vectors.shape, dtype=np.float64)
    for v in range(len(vectors)):
        out[v] = noise_vector(vectors[v], epsilon, (seed, v))
    return out


def build_dissimilarity(vectors) -> np.ndarray:
    """Pairwise L1 distances between rows, off-diagonal floored at 1.

    ``vectors`` is an ``n x K`` array (or a list of equal-length vectors).
    Returns a dense symmetric float64 matrix with a zero diagonal.
    """
    lengths = {len(v) for v in vectors}
    if len(lengths) > 1:
        raise ValueError(f"degree vectors disagree on K: {sorted(lengths)}")
    X = np.asarray(vectors, dtype=np.float64)
    n = len(X)
    if n > DENSE_WARN_N:
        _log.warning("dense %d x %d dissimilarity matrix needs %.1f GB", n, n, n * n * 8 / 1e9)
    S = np.zeros((n, n), dtype=np.float64)
    # accumulate per bin to keep peak memory at O(n^2)
    for l in range(X.shape[1] if X.ndim == 2 else 0):
        col = X[:, l]
        S += np.abs(col[:, None] - col[None, :])
    np.maximum(S, 1.0, out=S)
    np.fill_diagonal(S, 0.0)
    return S


def is_dissimilarity(S: np.ndarray) -> bool:
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        return False
    off = ~np.eye(len(S), dtype=bool)
    return bool(np.array_equal(S, S.T) and np.all(np.diag(S) == 0) and np.all(S[off] >= 1))
