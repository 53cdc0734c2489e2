"""Local swap moves and the Metropolis-Hastings chain over cluster trees.

For an internal node with children ``A``, ``B`` and sibling ``C`` (sizes
``a``, ``b``, ``c``), exchanging ``B`` with ``C`` changes the cost by
``c * S_sum(A, B) - b * S_sum(A, C)`` and exchanging ``A`` with ``C`` by
``c * S_sum(A, B) - a * S_sum(B, C)``. The chain targets a distribution
proportional to ``exp(cost / temperature)``; temperature 1 is the plain rule
``min(1, exp(delta))``.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .cost import dasgupta_cost
from .tree import NONE, ClusterTree, TreeError, random_tree

_log = logging.getLogger(__name__)

SIDES = ("left", "right")


class StaleMoveError(RuntimeError):
    pass


@dataclass(frozen=True)
class SwapDelta:
    """A proposed exchange of ``node``'s ``side`` child with ``node``'s sibling."""

    node: int
    side: str
    moved: int
    kept: int
    sibling: int
    parent: int
    delta: float
    version: int


def _block_sum(t: ClusterTree, S: np.ndarray, x: int, y: int) -> float:
    return float(S[np.ix_(t.leaves(x), t.leaves(y))].sum())


def propose_swap(t: ClusterTree, node: int, side: str, S: np.ndarray) -> SwapDelta:
    """Cost change of exchanging ``node``'s ``side`` child with its sibling.

    The tree is not modified.
    """
    if side not in SIDES:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if node < t.n or node >= t.num_nodes:
        raise TreeError(f"node {node} is not internal")
    if t.parent[node] == NONE:
        raise TreeError("the root has no sibling to swap with")
    a, b = t.children(node)
    moved, kept = (a, b) if side == "left" else (b, a)
    sib = t.sibling(node)
    s_ab = _block_sum(t, S, a, b)
    s_kc = _block_sum(t, S, kept, sib)
    delta = t.size[sib] * s_ab - t.size[moved] * s_kc
    return SwapDelta(node, side, moved, kept, sib, int(t.parent[node]), float(delta), t.version)


def apply_swap(t: ClusterTree, move: SwapDelta) -> None:
    """Perform ``move`` in place."""
    if move.version != t.version:
        raise StaleMoveError(f"move proposed at version {move.version}, tree is at {t.version}")
    node, x, c, p = move.node, move.moved, move.sibling, move.parent
    if t.left[node] == x:
        t.left[node] = c
    else:
        t.right[node] = c
    if t.left[p] == c:
        t.left[p] = x
    else:
        t.right[p] = x
    t.parent[c] = node
    t.parent[x] = p
    t.size[node] = t.size[move.kept] + t.size[c]
    t.version += 1


@dataclass
class McmcConfig:
    """Chain settings.

    ``window`` and ``max_steps`` default to ``window_factor * n`` and
    ``cap_factor * n``. The chain stops after a full window whose mean cost
    improves on the previous window's mean by less than ``tol`` (relative),
    or at ``max_steps``. ``checkpoint_every`` > 0 calls the checkpoint hook
    every that many steps. ``temperature`` != 1 is experimental.
    """

    window: int | None = None
    max_steps: int | None = None
    window_factor: int = 50
    cap_factor: int = 500
    tol: float = 1e-4
    temperature: float = 1.0
    trace_every: int = 1
    checkpoint_every: int = 0
    ring_size: int = 1024

    def resolve(self, n: int) -> tuple[int, int]:
        window = self.window if self.window else self.window_factor * n
        cap = self.max_steps if self.max_steps else self.cap_factor * n
        if window < 1 or cap < 1:
            raise ValueError("window and max_steps must be >= 1")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if self.trace_every < 1:
            raise ValueError("trace_every must be >= 1")
        return int(window), int(cap)


@dataclass
class McmcState:
    tree: ClusterTree
    current_cost: float
    step: int
    rng: np.random.Generator
    trace: deque = field(default_factory=deque)


@dataclass
class ChainResult:
    tree: ClusterTree
    cost: float
    steps: int
    accepted: int
    converged: bool
    trace_steps: np.ndarray
    trace_costs: np.ndarray
    trace_accepted: np.ndarray
    checkpoints: list = field(default_factory=list)
    max_drift: float = 0.0


def chain_seeds(seed) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent generators for the start tree and the proposal stream."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    a, b = ss.spawn(2)
    return np.random.default_rng(a), np.random.default_rng(b)


class _Chain:
    def __init__(self, S: np.ndarray, tree: ClusterTree):
        n = tree.n
        self.S = np.ascontiguousarray(S, dtype=np.float64)
        self.tree = tree
        self.R = np.zeros((max(n - 1, 1), n))
        self.W = np.zeros(tree.num_nodes)
        self.nodes = np.ascontiguousarray(tree.swappable_nodes())
        self.cost = self.resync()

    def resync(self) -> float:
        t = self.tree
        return float(_kernels.rebuild(t.n, t.root, t.left, t.right, t.size, self.S, self.R, self.W))

    def run(self, uniforms: np.ndarray, inv_temperature: float):
        t = self.tree
        k = len(uniforms)
        costs = np.empty(k)
        acc = np.empty(k, dtype=np.bool_)
        self.cost, accepted = _kernels.run_chain(
            t.n, t.left, t.right, t.parent, t.size, self.S, self.R, self.W,
            self.nodes, uniforms, inv_temperature, self.cost, costs, acc,
        )
        t.version += int(accepted)
        return costs, acc, int(accepted)


def gentree(S: np.ndarray, cfg: McmcConfig | None = None, seed=0, init: ClusterTree | None = None,
            on_checkpoint=None) -> ChainResult:
    """Sample a high-cost cluster tree for dissimilarity matrix ``S``.

    Starts from a random tree (or ``init``) and repeats: pick a non-root
    internal node uniformly, pick one of its two swaps uniformly, accept with
    probability ``min(1, exp(delta / temperature))``. The acceptance test is
    done in log space so large ``delta`` never overflows.

    Args:
        S: dense symmetric dissimilarity matrix.
        cfg: chain settings; see :class:`McmcConfig`.
        seed: int or SeedSequence; the run is a pure function of it and ``cfg``.
        init: optional start tree (copied).
        on_checkpoint: ``f(step, tree, cost)`` called at step 0 and every
            ``cfg.checkpoint_every`` steps; its return values are collected
            in ``ChainResult.checkpoints``.

    Returns:
        A :class:`ChainResult` whose ``tree`` is the last state of the chain.
    """
    cfg = cfg or McmcConfig()
    n = len(S)
    window, cap = cfg.resolve(n)
    tree_rng, step_rng = chain_seeds(seed)
    tree = init.copy() if init is not None else random_tree(n, tree_rng)
    chain = _Chain(S, tree)
    state = McmcState(tree, chain.cost, 0, step_rng, deque(maxlen=cfg.ring_size))
    inv_t = 1.0 / cfg.temperature

    trace_steps = [0]
    trace_costs = [chain.cost]
    trace_acc = [False]
    checkpoints = []
    every = cfg.checkpoint_every
    if on_checkpoint is not None and every > 0:
        checkpoints.append(on_checkpoint(0, tree, chain.cost))

    if len(chain.nodes) == 0:
        return ChainResult(tree, chain.cost, 0, 0, True, np.array(trace_steps),
                           np.array(trace_costs), np.array(trace_acc), checkpoints)

    accepted_total = 0
    converged = False
    prev_mean = None
    window_sum = 0.0
    window_fill = 0
    max_drift = 0.0
    while state.step < cap:
        nxt = min(cap, state.step + (window - window_fill))
        if on_checkpoint is not None and every > 0:
            nxt = min(nxt, (state.step // every + 1) * every)
        k = nxt - state.step
        uniforms = step_rng.random((k, 3))
        costs, acc, accepted = chain.run(uniforms, inv_t)
        accepted_total += accepted
        steps = np.arange(state.step + 1, nxt + 1)
        keep = steps % cfg.trace_every == 0
        trace_steps.extend(steps[keep].tolist())
        trace_costs.extend(costs[keep].tolist())
        trace_acc.extend(acc[keep].tolist())
        state.trace.extend(costs[-cfg.ring_size:].tolist())
        state.step = nxt
        window_sum += float(costs.sum())
        window_fill += k
        if on_checkpoint is not None and every > 0 and state.step % every == 0:
            checkpoints.append(on_checkpoint(state.step, tree, chain.cost))
        if window_fill == window:
            # shed accumulated floating-point drift of the incremental caches
            exact = chain.resync()
            max_drift = max(max_drift, abs(exact - chain.cost) / max(abs(exact), 1.0))
            chain.cost = exact
            mean = window_sum / window
            if prev_mean is not None and (mean - prev_mean) / max(abs(prev_mean), 1e-300) < cfg.tol:
                converged = True
                break
            prev_mean = mean
            window_sum = 0.0
            window_fill = 0
    state.current_cost = chain.cost
    _log.debug("gentree n=%d steps=%d accepted=%d converged=%s cost=%.6g",
               n, state.step, accepted_total, converged, chain.cost)
    return ChainResult(
        tree, chain.cost, state.step, accepted_total, converged,
        np.array(trace_steps, dtype=np.int64), np.array(trace_costs),
        np.array(trace_acc, dtype=bool), checkpoints, max_drift,
    )


def gentree_reference(S: np.ndarray, steps: int, seed=0, temperature: float = 1.0) -> tuple[ClusterTree, float]:
    """Pure-Python chain using :func:`propose_swap`/:func:`apply_swap`.

    Consumes the same random stream as :func:`gentree` (no convergence test,
    exactly ``steps`` proposals). Only practical for small ``n``; used to
    cross-check the compiled path.
    """
    n = len(S)
    tree_rng, step_rng = chain_seeds(seed)
    tree = random_tree(n, tree_rng)
    cost = dasgupta_cost(tree, S)
    nodes = tree.swappable_nodes()
    if len(nodes) == 0:
        return tree, cost
    uniforms = step_rng.random((steps, 3))
    for u0, u1, u2 in uniforms:
        node = int(nodes[int(u0 * len(nodes))])
        move = propose_swap(tree, node, "right" if u1 < 0.5 else "left", S)
        d = move.delta
        if d >= 0 or (u2 > 0 and math.log(u2) < d / temperature):
            apply_swap(tree, move)
            cost += d
    return tree, cost
