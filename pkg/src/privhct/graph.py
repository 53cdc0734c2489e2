"""Social graph and ratings containers, plus the text loaders for both.

Edge lists are whitespace-separated ``u v`` pairs with ``#`` comments. Vertex
ids in the file may be sparse; they are remapped to ``0..n-1`` in ascending
order of the original id and the mapping is kept on the graph so it can be
written out as a sidecar (``original_id<TAB>dense_id``).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sps
from scipy.sparse import csgraph

_log = logging.getLogger(__name__)


class ParseError(ValueError):
    """Malformed line in an input text file."""

    def __init__(self, path, lineno: int, msg: str):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.path = path
        self.lineno = lineno


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph over dense vertex ids ``0..n-1``.

    ``adjacency[v]`` is a sorted int64 array of the neighbours of ``v``.
    ``original_ids[v]`` is the id ``v`` had in the source file.
    """

    n: int
    adjacency: tuple
    original_ids: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], original_ids=None) -> "Graph":
        nbrs: list[set] = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                continue
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            nbrs[u].add(v)
            nbrs[v].add(u)
        adjacency = tuple(np.array(sorted(s), dtype=np.int64) for s in nbrs)
        if original_ids is None:
            original_ids = np.arange(n, dtype=np.int64)
        return cls(n, adjacency, np.asarray(original_ids, dtype=np.int64))

    @property
    def num_edges(self) -> int:
        return int(sum(len(a) for a in self.adjacency)) // 2

    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=np.int64)

    def edges(self) -> np.ndarray:
        """Each undirected edge once as a ``(u, v)`` row with ``u < v``."""
        rows = [(u, v) for u in range(self.n) for v in self.adjacency[u] if u < v]
        return np.array(rows, dtype=np.int64).reshape(-1, 2)

    def has_edge(self, u: int, v: int) -> bool:
        a = self.adjacency[u]
        i = np.searchsorted(a, v)
        return bool(i < len(a) and a[i] == v)

    def to_csr(self) -> sps.csr_matrix:
        e = self.edges()
        data = np.ones(2 * len(e), dtype=np.int8)
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return sps.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def subgraph(self, keep: Sequence[int]) -> "Graph":
        """Induced subgraph on ``keep`` (dense ids), renumbered in the given order."""
        keep = np.asarray(keep, dtype=np.int64)
        remap = -np.ones(self.n, dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        edges = []
        for new_u, u in enumerate(keep):
            for v in self.adjacency[u]:
                nv = remap[v]
                if nv > new_u:
                    edges.append((new_u, int(nv)))
        return Graph.from_edges(len(keep), edges, self.original_ids[keep])


@dataclass(frozen=True)
class RatingsMatrix:
    """Sparse user x item ratings normalised to ``[0, 1]``.

    ``users``/``items``/``values`` are parallel arrays, one entry per rated
    (user, item) pair. User ids are graph vertex ids; item ids are dense.
    """

    n_users: int
    n_items: int
    users: np.ndarray
    items: np.ndarray
    values: np.ndarray
    item_ids: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if len(self.values) and (self.values.min() < 0 or self.values.max() > 1):
            raise ValueError("ratings must lie in [0, 1]")
        keys = self.users * max(self.n_items, 1) + self.items
        if len(np.unique(keys)) != len(keys):
            raise ValueError("duplicate (user, item) entries")

    @property
    def nnz(self) -> int:
        return len(self.values)

    def to_csr(self) -> sps.csr_matrix:
        return sps.csr_matrix(
            (self.values, (self.users, self.items)), shape=(self.n_users, self.n_items)
        )

    def select_users(self, mask: np.ndarray) -> "RatingsMatrix":
        """Keep only the entries whose user is flagged in ``mask`` (length n_users)."""
        keep = mask[self.users]
        return RatingsMatrix(
            self.n_users, self.n_items, self.users[keep], self.items[keep],
            self.values[keep], self.item_ids,
        )

    def rated_by(self, user: int) -> np.ndarray:
        return self.items[self.users == user]


def _data_lines(path: Path):
    """Yield ``(lineno, fields)`` for non-blank, non-comment lines.

    A first line whose fields are not numeric is treated as a column header
    (the HetRec ``.dat`` files carry one).
    """
    with open(path, encoding="utf-8") as fh:
        first = True
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if first:
                first = False
                try:
                    float(fields[0])
                except ValueError:
                    continue
            yield lineno, fields


def load_graph(path, format: str = "edge-list") -> Graph:
    """Read an undirected edge list.

    Edges are symmetrised and de-duplicated; self-loops are dropped with a
    warning. Raises :class:`ParseError` carrying the line number on any line
    that is not two integers.
    """
    if format != "edge-list":
        raise ValueError(f"unsupported graph format {format!r}")
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"file not found: {path}")
    raw_edges = []
    ids = set()
    loops = 0
    for lineno, fields in _data_lines(path):
        if len(fields) < 2:
            raise ParseError(path, lineno, f"expected 'u v', got {' '.join(fields)!r}")
        try:
            u, v = int(fields[0]), int(fields[1])
        except ValueError:
            raise ParseError(path, lineno, f"non-integer vertex id in {' '.join(fields[:2])!r}") from None
        ids.add(u)
        ids.add(v)
        if u == v:
            loops += 1
            continue
        raw_edges.append((u, v))
    if loops:
        _log.warning("%s: dropped %d self-loop(s)", path, loops)
    original = np.array(sorted(ids), dtype=np.int64)
    index = {int(o): i for i, o in enumerate(original)}
    return Graph.from_edges(
        len(original), ((index[u], index[v]) for u, v in raw_edges), original
    )


def write_graph(g: Graph, path, id_map_path=None) -> None:
    """Write ``g`` as an edge list in original ids, optionally with the id sidecar."""
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in g.edges():
            fh.write(f"{g.original_ids[u]}\t{g.original_ids[v]}\n")
    if id_map_path is not None:
        write_id_map(g, id_map_path)


def write_id_map(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for dense, orig in enumerate(g.original_ids):
            fh.write(f"{orig}\t{dense}\n")


def parse_normalization(spec: str) -> tuple[str, float | None]:
    """``'max-per-user'`` or ``'max-global(5.0)'`` / ``'max-global:5'``."""
    spec = spec.strip()
    if spec == "max-per-user":
        return spec, None
    if spec.startswith("max-global"):
        arg = spec[len("max-global"):].strip("():= ")
        c = float(arg)
        if c <= 0:
            raise ValueError("max-global constant must be positive")
        return "max-global", c
    raise ValueError(f"unknown normalization {spec!r}")


def _read_triples(path: Path) -> dict[tuple[int, int], float]:
    rows: dict[tuple[int, int], float] = {}
    for lineno, fields in _data_lines(path):
        if len(fields) < 3:
            raise ParseError(path, lineno, "expected 'user item weight'")
        try:
            u, it, w = int(fields[0]), int(fields[1]), float(fields[2])
        except ValueError:
            raise ParseError(path, lineno, f"cannot parse {' '.join(fields[:3])!r}") from None
        if not w > 0:
            _log.warning("%s:%d: non-positive weight %g skipped", path, lineno, w)
            continue
        rows[(u, it)] = rows.get((u, it), 0.0) + w
    return rows


def load_ratings(path, normalization: str = "max-per-user", graph: Graph | None = None,
                 on_unknown: str = "error") -> RatingsMatrix:
    """Read ``user item weight`` triples and normalise them into ``[0, 1]``.

    Args:
        path: triple file; extra trailing columns are ignored.
        normalization: ``max-per-user`` divides each user's weights by that
            user's maximum; ``max-global(c)`` divides every weight by ``c``.
        graph: when given, user ids are resolved through the graph's original
            ids so rows line up with vertices. Without it users are remapped
            densely like items.
        on_unknown: ``"error"`` raises on a user absent from ``graph``;
            ``"drop"`` skips those users (the count is logged).

    Lines with a non-positive weight are skipped with a warning. Repeated
    (user, item) lines are summed before normalisation.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"file not found: {path}")
    mode, const = parse_normalization(normalization)
    rows = _read_triples(path)

    if graph is not None:
        lookup = {int(o): i for i, o in enumerate(graph.original_ids)}
        unknown = {u for u, _ in rows if u not in lookup}
        if unknown and on_unknown != "drop":
            raise ValueError(f"{path}: unknown user id {min(unknown)}")
        if unknown:
            _log.info("%s: dropped %d user(s) absent from the graph", path, len(unknown))
            rows = {k: w for k, w in rows.items() if k[0] in lookup}
        n_users = graph.n
    else:
        user_ids = sorted({u for u, _ in rows})
        lookup = {u: i for i, u in enumerate(user_ids)}
        n_users = len(user_ids)

    item_ids = np.array(sorted({it for _, it in rows}), dtype=np.int64)
    item_index = {int(o): i for i, o in enumerate(item_ids)}
    users = np.array([lookup[u] for u, _ in rows], dtype=np.int64)
    items = np.array([item_index[it] for _, it in rows], dtype=np.int64)
    weights = np.array(list(rows.values()), dtype=np.float64)

    if mode == "max-per-user":
        user_max = np.zeros(n_users)
        np.maximum.at(user_max, users, weights)
        values = weights / user_max[users] if len(weights) else weights
    else:
        values = weights / const
        if len(values) and values.max() > 1:
            raise ValueError(f"weight above max-global constant {const}")
    order = np.lexsort((items, users))
    return RatingsMatrix(n_users, len(item_ids), users[order], items[order], values[order], item_ids)


@dataclass(frozen=True)
class Alignment:
    graph: Graph
    ratings: RatingsMatrix
    dropped_vertices: int
    dropped_users: int


def align(graph: Graph, ratings_path, normalization: str, restrict_graph: bool = True) -> Alignment:
    """Load ratings against ``graph`` keeping only users present in both.

    Ratings of users missing from the graph are dropped. With
    ``restrict_graph`` the graph is also reduced to the induced subgraph on
    vertices that have at least one rating.
    """
    raters = {u for u, _ in _read_triples(Path(ratings_path))}
    in_graph = {int(o) for o in graph.original_ids}
    dropped_users = len(raters - in_graph)
    dropped_vertices = 0
    if restrict_graph:
        keep = [i for i, o in enumerate(graph.original_ids) if int(o) in raters]
        dropped_vertices = graph.n - len(keep)
        graph = graph.subgraph(keep)
    ratings = load_ratings(ratings_path, normalization, graph=graph, on_unknown="drop")
    return Alignment(graph, ratings, dropped_vertices, dropped_users)


def shortest_paths_from(g: Graph, source: int) -> np.ndarray:
    """Hop distances from ``source``; unreachable vertices get ``np.inf``."""
    if not 0 <= source < g.n:
        raise ValueError(f"source {source} out of range")
    return csgraph.shortest_path(g.to_csr(), method="D", unweighted=True, indices=source)


def all_pairs_hops(g: Graph) -> np.ndarray:
    """Dense ``n x n`` hop-distance matrix (``np.inf`` when unreachable)."""
    if g.n == 0:
        return np.zeros((0, 0))
    return csgraph.shortest_path(g.to_csr(), method="D", unweighted=True)


def largest_component(g: Graph) -> Graph:
    """Induced subgraph on the largest connected component (ties: lowest ids)."""
    if g.n == 0:
        return g
    _, labels = csgraph.connected_components(g.to_csr(), directed=False)
    sizes = np.bincount(labels)
    return g.subgraph(np.flatnonzero(labels == int(np.argmax(sizes))))
