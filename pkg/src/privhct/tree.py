"""Full binary cluster trees stored as flat parent/child arrays.

Node ids ``0..n-1`` are the leaves (leaf ``v`` carries vertex ``v``) and
``n..2n-2`` are internal nodes. Local swaps never move the root, so
``root`` is fixed for the lifetime of a tree.
"""

from __future__ import annotations

import re

import numpy as np

NONE = -1


class TreeError(ValueError):
    pass


class ClusterTree:
    """Rooted full binary tree over ``n`` labelled leaves.

    Attributes:
        n: number of leaves.
        left, right: child ids per node (``-1`` for leaves).
        parent: parent id per node (``-1`` for the root).
        size: cached leaf count per node.
        root: id of the root node.
        version: bumped on every mutation; swap moves carry the version they
            were proposed against.
    """

    def __init__(self, n: int, left, right, parent, root: int, size=None):
        self.n = n
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.parent = np.asarray(parent, dtype=np.int64)
        self.root = int(root)
        self.size = np.asarray(size, dtype=np.int64) if size is not None else self.recount()
        self.version = 0

    @property
    def num_nodes(self) -> int:
        return 2 * self.n - 1

    def is_leaf(self, node: int) -> bool:
        return node < self.n

    def internal_nodes(self) -> np.ndarray:
        return np.arange(self.n, 2 * self.n - 1)

    def swappable_nodes(self) -> np.ndarray:
        """Internal nodes that have a parent."""
        ids = self.internal_nodes()
        return ids[ids != self.root]

    def children(self, node: int) -> tuple[int, int]:
        return int(self.left[node]), int(self.right[node])

    def sibling(self, node: int) -> int:
        p = self.parent[node]
        if p == NONE:
            raise TreeError("root has no sibling")
        return int(self.right[p] if self.left[p] == node else self.left[p])

    def leaves(self, node: int | None = None) -> np.ndarray:
        """Leaf vertex ids under ``node`` in left-to-right order."""
        node = self.root if node is None else node
        out = []
        stack = [node]
        while stack:
            x = stack.pop()
            if x < self.n:
                out.append(x)
            else:
                stack.append(int(self.right[x]))
                stack.append(int(self.left[x]))
        return np.array(out, dtype=np.int64)

    def postorder(self) -> list[int]:
        """Internal nodes, children before parents."""
        order = []
        stack = [self.root]
        while stack:
            x = stack.pop()
            if x >= self.n:
                order.append(x)
                stack.append(int(self.left[x]))
                stack.append(int(self.right[x]))
        order.reverse()
        return order

    def recount(self) -> np.ndarray:
        size = np.zeros(2 * self.n - 1, dtype=np.int64)
        size[: self.n] = 1
        for x in self.postorder():
            size[x] = size[self.left[x]] + size[self.right[x]]
        return size

    def depths(self) -> np.ndarray:
        d = np.zeros(2 * self.n - 1, dtype=np.int64)
        stack = [self.root]
        while stack:
            x = stack.pop()
            if x >= self.n:
                for c in (self.left[x], self.right[x]):
                    d[c] = d[x] + 1
                    stack.append(int(c))
        return d

    def ancestors(self, node: int) -> list[int]:
        out = []
        x = int(self.parent[node])
        while x != NONE:
            out.append(x)
            x = int(self.parent[x])
        return out

    def lca(self, x: int, y: int) -> int:
        seen = {x, *self.ancestors(x)}
        z = y
        while z not in seen:
            z = int(self.parent[z])
        return z

    def copy(self) -> "ClusterTree":
        t = ClusterTree(self.n, self.left.copy(), self.right.copy(), self.parent.copy(),
                        self.root, self.size.copy())
        t.version = self.version
        return t

    def validate(self) -> None:
        """Raise :class:`TreeError` unless every structural invariant holds."""
        n = self.n
        m = 2 * n - 1
        if not (len(self.left) == len(self.right) == len(self.parent) == len(self.size) == m):
            raise TreeError("array lengths disagree with n")
        if self.parent[self.root] != NONE or self.root < n and n > 1:
            raise TreeError("bad root")
        if np.any(self.left[:n] != NONE) or np.any(self.right[:n] != NONE):
            raise TreeError("leaf with children")
        for x in range(n, m):
            l, r = self.left[x], self.right[x]
            if l == NONE or r == NONE or l == r:
                raise TreeError(f"internal node {x} is not full")
            if self.parent[l] != x or self.parent[r] != x:
                raise TreeError(f"parent links of {x} inconsistent")
        if sum(1 for x in range(m) if self.parent[x] == NONE) != 1:
            raise TreeError("expected exactly one parentless node")
        seen = self.leaves()
        if len(seen) != n or not np.array_equal(np.sort(seen), np.arange(n)):
            raise TreeError("leaves are not a permutation of 0..n-1")
        if not np.array_equal(self.size, self.recount()):
            raise TreeError("cached leaf counts stale")

    def canonical(self) -> str:
        """Newick string with children ordered by smallest leaf; equal for isomorphic trees."""
        key = {}
        label = {}
        for v in range(self.n):
            key[v] = v
            label[v] = str(v)
        for x in self.postorder():
            a, b = int(self.left[x]), int(self.right[x])
            if key[b] < key[a]:
                a, b = b, a
            key[x] = key[a]
            label[x] = f"({label[a]},{label[b]})"
            del label[a], label[b]
        return label[self.root] + ";"

    def to_newick(self) -> str:
        if self.n == 1:
            return "0;"
        parts = []
        stack = [(self.root, 0)]
        while stack:
            x, state = stack.pop()
            if x < self.n:
                parts.append(str(x))
            elif state == 0:
                parts.append("(")
                stack.append((x, 1))
                stack.append((int(self.left[x]), 0))
            elif state == 1:
                parts.append(",")
                stack.append((x, 2))
                stack.append((int(self.right[x]), 0))
            else:
                parts.append(")")
        return "".join(parts) + ";"

    def __repr__(self) -> str:
        return f"ClusterTree(n={self.n}, {self.canonical()})"


_COMMENT = re.compile(r"\[[^\]]*\]")


def parse_newick(text: str) -> ClusterTree:
    """Inverse of :meth:`ClusterTree.to_newick`; ``[...]`` comments are ignored."""
    s = _COMMENT.sub("", text).strip()
    if not s.endswith(";"):
        raise TreeError("newick string must end with ';'")
    s = "".join(s[:-1].split())
    tokens = re.findall(r"\(|\)|,|\d+", s)
    if "".join(tokens) != s:
        raise TreeError("unexpected characters in newick string")
    leaf_ids = [int(t) for t in tokens if t.isdigit()]
    n = len(leaf_ids)
    if sorted(leaf_ids) != list(range(n)):
        raise TreeError("leaf labels must be a permutation of 0..n-1")
    m = 2 * n - 1
    left = np.full(m, NONE, dtype=np.int64)
    right = np.full(m, NONE, dtype=np.int64)
    parent = np.full(m, NONE, dtype=np.int64)
    nxt = n
    stack: list[list[int]] = []
    last = NONE
    for tok in tokens:
        if tok == "(":
            stack.append([])
        elif tok == ",":
            continue
        elif tok == ")":
            kids = stack.pop()
            if len(kids) != 2:
                raise TreeError("every internal node needs exactly two children")
            x = nxt
            nxt += 1
            left[x], right[x] = kids
            parent[kids[0]] = parent[kids[1]] = x
            last = x
            if stack:
                stack[-1].append(x)
        else:
            last = int(tok)
            if stack:
                stack[-1].append(last)
    if stack or nxt != m:
        raise TreeError("unbalanced newick string")
    return ClusterTree(n, left, right, parent, last)


def from_nested(spec) -> ClusterTree:
    """Build a tree from nested 2-tuples of leaf ids, e.g. ``(((0, 1), 2), 3)``."""
    text = repr(spec).replace(" ", "")
    return parse_newick(text + ";")


def random_tree(n: int, seed) -> ClusterTree:
    """Random tree by sequential leaf insertion over a shuffled leaf order.

    Each new leaf is attached above a node chosen uniformly among the current
    nodes (equivalently: on a uniform edge, or above the root), on a random
    side.
    """
    if n < 2:
        raise ValueError("a cluster tree needs at least 2 leaves")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    order = rng.permutation(n)
    m = 2 * n - 1
    left = np.full(m, NONE, dtype=np.int64)
    right = np.full(m, NONE, dtype=np.int64)
    parent = np.full(m, NONE, dtype=np.int64)
    nodes = [int(order[0]), int(order[1])]
    root = n
    left[root], right[root] = nodes
    parent[nodes[0]] = parent[nodes[1]] = root
    nodes.append(root)
    nxt = n + 1
    for leaf in order[2:]:
        leaf = int(leaf)
        at = nodes[rng.integers(len(nodes))]
        x = nxt
        nxt += 1
        p = parent[at]
        if rng.random() < 0.5:
            left[x], right[x] = at, leaf
        else:
            left[x], right[x] = leaf, at
        parent[at] = parent[leaf] = x
        parent[x] = p
        if p == NONE:
            root = x
        elif left[p] == at:
            left[p] = x
        else:
            right[p] = x
        nodes.extend((leaf, x))
    return ClusterTree(n, left, right, parent, root)


def nearest_neighbors(t: ClusterTree, u: int, m: int) -> list[int]:
    """The ``m`` vertices closest to ``u`` in the tree.

    Walks from ``u``'s leaf towards the root; at each ancestor the leaves of
    the sibling subtree that joins in are appended in ascending vertex order.
    """
    if not 0 <= u < t.n:
        raise ValueError(f"vertex {u} out of range")
    if not 1 <= m <= t.n - 1:
        raise ValueError(f"m must be in [1, {t.n - 1}], got {m}")
    out: list[int] = []
    x = u
    while len(out) < m:
        sib = t.sibling(x)
        out.extend(int(v) for v in np.sort(t.leaves(sib)))
        x = int(t.parent[x])
    return out[:m]
