"""Compiled inner loops for the swap chain and tree scoring.

The chain keeps two caches next to the tree arrays:

* ``R[x - n]`` for internal ``x``: the sum of the dissimilarity rows of the
  leaves under ``x`` (for a leaf ``v`` the row is ``S[v]`` itself), so
  ``S_sum(X, Y)`` is a sum of ``R_X`` over the leaves of ``Y``;
* ``W[x]``: ``S_sum(left(x), right(x))``.

A swap only changes the leaf set of the node whose child moves, so each
accepted move refreshes one ``R`` row and two ``W`` entries.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _collect(node, n, left, right, stack, out):
    top = 0
    k = 0
    stack[0] = node
    top = 1
    while top > 0:
        top -= 1
        x = stack[top]
        if x < n:
            out[k] = x
            k += 1
        else:
            stack[top] = right[x]
            stack[top + 1] = left[x]
            top += 2
    return k


@njit(cache=True)
def _cross(a, b, n, left, right, size, S, R, stack, buf):
    # enumerate the smaller side, index the other side's row sums
    if size[a] > size[b]:
        a, b = b, a
    k = _collect(a, n, left, right, stack, buf)
    total = 0.0
    if b < n:
        for i in range(k):
            total += S[b, buf[i]]
    else:
        row = R[b - n]
        for i in range(k):
            total += row[buf[i]]
    return total


@njit(cache=True)
def _postorder(n, root, left, right, stack, out):
    top = 1
    k = 0
    stack[0] = root
    while top > 0:
        top -= 1
        x = stack[top]
        if x >= n:
            out[k] = x
            k += 1
            stack[top] = left[x]
            stack[top + 1] = right[x]
            top += 2
    # reversed preorder (parent before children) is a valid children-first order
    for i in range(k // 2):
        out[i], out[k - 1 - i] = out[k - 1 - i], out[i]
    return k


@njit(cache=True)
def rebuild(n, root, left, right, size, S, R, W):
    """Recompute sizes, ``R`` and ``W`` from scratch; return the Dasgupta cost."""
    stack = np.empty(2 * n + 2, dtype=np.int64)
    buf = np.empty(n, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    k = _postorder(n, root, left, right, stack, order)
    cost = 0.0
    for i in range(k):
        x = order[i]
        a = left[x]
        b = right[x]
        size[x] = size[a] + size[b]
        row = R[x - n]
        if a < n:
            row[:] = S[a]
        else:
            row[:] = R[a - n]
        if b < n:
            row += S[b]
        else:
            row += R[b - n]
        W[x] = _cross(a, b, n, left, right, size, S, R, stack, buf)
        cost += size[x] * W[x]
    return cost


@njit(cache=True)
def run_chain(n, left, right, parent, size, S, R, W, nodes, uniforms,
              inv_temperature, cost, cost_out, acc_out):
    """Advance the chain one step per row of ``uniforms``.

    Row ``(u0, u1, u2)`` picks the node ``nodes[floor(u0 * len(nodes))]``,
    exchanges its right child with the sibling when ``u1 < 0.5`` (its left
    child otherwise) and accepts when ``delta >= 0`` or
    ``log(u2) < delta * inv_temperature``.
    """
    stack = np.empty(2 * n + 2, dtype=np.int64)
    buf = np.empty(n, dtype=np.int64)
    m = len(nodes)
    accepted = 0
    for step in range(uniforms.shape[0]):
        lam = nodes[int(uniforms[step, 0] * m)]
        p = parent[lam]
        c = left[p] if right[p] == lam else right[p]
        if uniforms[step, 1] < 0.5:
            x = right[lam]
            y = left[lam]
        else:
            x = left[lam]
            y = right[lam]
        s_yc = _cross(y, c, n, left, right, size, S, R, stack, buf)
        delta = size[c] * W[lam] - size[x] * s_yc
        ok = delta >= 0.0
        if not ok:
            u = uniforms[step, 2]
            ok = u > 0.0 and np.log(u) < delta * inv_temperature
        if ok:
            if left[lam] == x:
                left[lam] = c
            else:
                right[lam] = c
            if left[p] == c:
                left[p] = x
            else:
                right[p] = x
            parent[c] = lam
            parent[x] = p
            size[lam] = size[y] + size[c]
            row = R[lam - n]
            if y < n:
                row[:] = S[y]
            else:
                row[:] = R[y - n]
            if c < n:
                row += S[c]
            else:
                row += R[c - n]
            w_old = W[lam]
            W[lam] = s_yc
            W[p] = w_old + W[p] - s_yc
            cost += delta
            accepted += 1
        cost_out[step] = cost
        acc_out[step] = ok
    return cost, accepted


@njit(cache=True)
def edge_lca_counts(n, root, left, right, parent, eu, ev):
    """Number of graph edges whose endpoints meet at each internal node."""
    m = 2 * n - 1
    depth = np.zeros(m, dtype=np.int64)
    stack = np.empty(2 * n + 2, dtype=np.int64)
    stack[0] = root
    top = 1
    while top > 0:
        top -= 1
        x = stack[top]
        if x >= n:
            for c in (left[x], right[x]):
                depth[c] = depth[x] + 1
                stack[top] = c
                top += 1
    counts = np.zeros(m, dtype=np.int64)
    for i in range(len(eu)):
        a = eu[i]
        b = ev[i]
        while depth[a] > depth[b]:
            a = parent[a]
        while depth[b] > depth[a]:
            b = parent[b]
        while a != b:
            a = parent[a]
            b = parent[b]
        counts[a] += 1
    return counts
