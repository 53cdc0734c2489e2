"""End-to-end private tree construction over a graph held per vertex.

The aggregator draws a bin partition, every user reports one noised degree
vector, and the chain runs on the L1 dissimilarities of the reports. The
un-noised vectors are simulated alongside so the released tree can be scored
against the true matrix.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import ldp
from .cost import PAIR_CONVENTION, clique_cost, dasgupta_cost
from .graph import Graph
from .mcmc import ChainResult, McmcConfig, gentree
from .tree import ClusterTree

# spawn keys separating the partition and chain streams of one run seed
_PARTITION_KEY = 1
_CHAIN_KEY = 2


def partition_for(n: int, K: int, seed: int) -> ldp.BinPartition:
    return ldp.random_partition(n, K, np.random.SeedSequence(seed, spawn_key=(_PARTITION_KEY,)))


def chain_seed(seed: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(_CHAIN_KEY,))


@dataclass
class RunMetadata:
    n: int
    K: int
    epsilon: float | None
    effective_edge_epsilon: float | None
    seed: int
    steps: int
    accepted: int
    converged: bool
    cost_noisy: float
    cost_true: float
    rho: float
    pair_convention: str = PAIR_CONVENTION
    window: int = 0
    max_steps: int = 0
    temperature: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PrivactRun:
    tree: ClusterTree
    metadata: RunMetadata
    chain: ChainResult
    partition: ldp.BinPartition = field(repr=False)
    true_vectors: np.ndarray = field(repr=False)
    noisy_vectors: np.ndarray | None = field(repr=False)
    S_true: np.ndarray = field(repr=False)
    S_used: np.ndarray = field(repr=False)


def resolve_bins(n: int, K: int = 0) -> int:
    return ldp.default_bins(n) if K == 0 else K


def privact(g: Graph, epsilon: float | None, cfg: McmcConfig | None = None, seed: int = 0,
            K: int = 0, on_checkpoint=None) -> PrivactRun:
    """Learn a cluster tree from per-user noisy degree vectors.

    Args:
        g: the graph; each vertex's adjacency stands in for that user's
            locally held contact list.
        epsilon: per-user privacy budget. ``None`` runs the non-private
            variant on the exact vectors (same partition and chain seed).
        cfg: chain settings.
        seed: run seed; the partition, the per-user noise ``(seed, v)`` and
            the chain stream are all derived from it.
        K: bin count, ``0`` for ``floor(log2 n)``.
        on_checkpoint: forwarded to :func:`gentree`.
    """
    if epsilon is not None and not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    cfg = cfg or McmcConfig()
    K = resolve_bins(g.n, K)
    part = partition_for(g.n, K, seed)
    exact = ldp.degree_vectors(g, part)
    S_true = ldp.build_dissimilarity(exact)
    if epsilon is None:
        noisy = None
        S_used = S_true
    else:
        noisy = np.empty(exact.shape, dtype=np.float64)
        for v in range(g.n):
            noisy[v] = ldp.noise_vector(exact[v], epsilon, (seed, v))
        S_used = ldp.build_dissimilarity(noisy)
    result = gentree(S_used, cfg, chain_seed(seed), on_checkpoint=on_checkpoint)
    window, cap = cfg.resolve(g.n)
    meta = RunMetadata(
        n=g.n, K=K, epsilon=epsilon,
        effective_edge_epsilon=None if epsilon is None else 2 * epsilon,
        seed=seed, steps=result.steps, accepted=result.accepted, converged=result.converged,
        cost_noisy=result.cost,
        cost_true=dasgupta_cost(result.tree, S_true),
        rho=clique_cost(g.n) if g.n >= 2 else 0.0,
        window=window, max_steps=cap, temperature=cfg.temperature,
    )
    return PrivactRun(result.tree, meta, result, part, exact, noisy, S_true, S_used)


def noisy_vectors_for(g: Graph, epsilon: float, seed: int, K: int = 0) -> np.ndarray:
    """Re-derive the reports of a :func:`privact` run from its seed."""
    part = partition_for(g.n, resolve_bins(g.n, K), seed)
    return ldp.noise_vectors(ldp.degree_vectors(g, part), epsilon, seed)
