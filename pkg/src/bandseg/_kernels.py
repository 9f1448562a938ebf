"""Compiled inner loops shared by the dense and sparse engines."""

import numpy as np
from numba import njit

EPS = 1e-12


# -- densest-prefix pooling ---------------------------------------------------


@njit(cache=True)
def _not_denser(c1, s1, c2, s2, integral):
    # density(1) <= density(2)
    if integral:
        return s1 * c2 <= s2 * c1
    return s1 / c1 <= s2 / c2 + EPS


@njit(cache=True)
def pool_prefixes(counts, sums, integral):
    """Block id of every item after greedy densest-prefix pooling.

    Items are merged whenever the earlier block is not strictly denser, so
    blocks have strictly decreasing densities and every block extends to the
    largest index among equally dense prefixes.
    """
    n = counts.shape[0]
    bc = np.empty(n, np.float64)
    bs = np.empty(n, np.float64)
    bstart = np.empty(n, np.int64)
    top = 0
    for i in range(n):
        c = float(counts[i])
        s = sums[i]
        start = i
        while top > 0 and _not_denser(bc[top - 1], bs[top - 1], c, s, integral):
            top -= 1
            c += bc[top]
            s += bs[top]
            start = bstart[top]
        bc[top] = c
        bs[top] = s
        bstart[top] = start
        top += 1
    block = np.empty(n, np.int64)
    for b in range(top):
        stop = bstart[b + 1] if b + 1 < top else n
        for i in range(bstart[b], stop):
            block[i] = b
    return block


# -- greedy topological traversal ----------------------------------------------


@njit(cache=True)
def _before(h1, h2, hn, i, j):
    if h1[i] != h1[j]:
        return h1[i] > h1[j]
    if h2[i] != h2[j]:
        return h2[i] > h2[j]
    return hn[i] < hn[j]


@njit(cache=True)
def _swap(h1, h2, hn, i, j):
    h1[i], h1[j] = h1[j], h1[i]
    h2[i], h2[j] = h2[j], h2[i]
    hn[i], hn[j] = hn[j], hn[i]


@njit(cache=True)
def _push(h1, h2, hn, size, node, k1, k2):
    # keys are stored next to the node so comparisons stay in cache
    i = size
    h1[i] = k1[node]
    h2[i] = k2[node]
    hn[i] = node
    while i > 0:
        p = (i - 1) >> 1
        if _before(h1, h2, hn, i, p):
            _swap(h1, h2, hn, i, p)
            i = p
        else:
            break
    return size + 1


@njit(cache=True)
def _pop(h1, h2, hn, size):
    top = hn[0]
    size -= 1
    h1[0] = h1[size]
    h2[0] = h2[size]
    hn[0] = hn[size]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        best = left
        right = left + 1
        if right < size and _before(h1, h2, hn, right, left):
            best = right
        if _before(h1, h2, hn, best, i):
            _swap(h1, h2, hn, i, best)
            i = best
        else:
            break
    return top, size


@njit(cache=True)
def greedy_topological(indptr, children, indegree, k1, k2):
    """Max-key-first traversal of a DAG given by CSR child lists.

    Among available nodes the largest ``(k1, k2)`` goes first, ties to the
    smaller index.  A node becomes available once all of its parents are
    output.  Returns the visiting order, or an order shorter than the node
    count if a cycle blocks progress.
    """
    n = indegree.shape[0]
    deg = indegree.copy()
    h1 = np.empty(n, np.float64)
    h2 = np.empty(n, np.float64)
    hn = np.empty(n, np.int64)
    size = 0
    for i in range(n):
        if deg[i] == 0:
            size = _push(h1, h2, hn, size, i, k1, k2)
    out = np.empty(n, np.int64)
    k = 0
    while size > 0:
        node, size = _pop(h1, h2, hn, size)
        out[k] = node
        k += 1
        for e in range(indptr[node], indptr[node + 1]):
            c = children[e]
            deg[c] -= 1
            if deg[c] == 0:
                size = _push(h1, h2, hn, size, c, k1, k2)
    return out[:k]


@njit(cache=True)
def greedy_topological_packed(indptr, children, indegree, key):
    """:func:`greedy_topological` with distinct int64 keys, largest first."""
    n = indegree.shape[0]
    deg = indegree.copy()
    heap = np.empty(n, np.int64)
    size = 0
    out = np.empty(n, np.int64)
    k = 0
    for i in range(n):
        if deg[i] == 0:
            j = size
            heap[j] = key[i]
            size += 1
            while j > 0:
                p = (j - 1) >> 1
                if heap[j] > heap[p]:
                    heap[j], heap[p] = heap[p], heap[j]
                    j = p
                else:
                    break
    while size > 0:
        top = heap[0]
        size -= 1
        heap[0] = heap[size]
        j = 0
        while True:
            left = 2 * j + 1
            if left >= size:
                break
            best = left
            if left + 1 < size and heap[left + 1] > heap[left]:
                best = left + 1
            if heap[best] > heap[j]:
                heap[j], heap[best] = heap[best], heap[j]
                j = best
            else:
                break
        node = n - 1 - top % n
        out[k] = node
        k += 1
        for e in range(indptr[node], indptr[node + 1]):
            c = children[e]
            deg[c] -= 1
            if deg[c] == 0:
                j = size
                heap[j] = key[c]
                size += 1
                while j > 0:
                    p = (j - 1) >> 1
                    if heap[j] > heap[p]:
                        heap[j], heap[p] = heap[p], heap[j]
                        j = p
                    else:
                        break
    return out[:k]


def traverse_dag(indptr, children, indegree, k1, k2):
    """Greedy topological order by (k1, k2) descending, ties to the smaller index.

    Integer-valued keys (segment labels and previous positions, as used by
    the flip tie-breaker) are packed into one int64 per node, which halves
    the traversal time; other keys use the general heap.
    """
    n = indegree.shape[0]
    if n and np.all(k1 == np.floor(k1)) and np.all(k2 == np.floor(k2)):
        lo1, hi1 = k1.min(), k1.max()
        lo2, hi2 = k2.min(), k2.max()
        span2 = hi2 - lo2 + 1.0
        if (hi1 - lo1 + 1.0) * span2 * n < 2.0 ** 62:
            r1 = (k1 - lo1).astype(np.int64)
            r2 = (k2 - lo2).astype(np.int64)
            key = (r1 * np.int64(span2) + r2) * n + (n - 1 - np.arange(n, dtype=np.int64))
            return greedy_topological_packed(indptr, children, indegree, key)
    return greedy_topological(indptr, children, indegree, k1, k2)


# -- dominance lattice over sparse points ---------------------------------------


@njit(cache=True)
def _first_below(tree, size, lo, thr):
    """First leaf index >= lo with value < thr, or -1."""
    i = lo + size
    if tree[i] < thr:
        return lo
    while True:
        # climb while i is a right child, then step to the right sibling
        while i & 1:
            i >>= 1
            if i <= 1:
                return -1
        i += 1
        if tree[i] < thr:
            break
    while i < size:
        if tree[2 * i] < thr:
            i = 2 * i
        else:
            i = 2 * i + 1
    return i - size


@njit(cache=True)
def lattice_edges(a, b, n_cols):
    """Cover relation of the coordinate dominance order on points.

    Points must be sorted by (a, b) ascending and distinct.  Returns parallel
    arrays (src, dst) with src <= dst coordinate-wise and no third point in the
    closed box between them.
    """
    n = a.shape[0]
    size = 1
    while size < max(n_cols, 1):
        size *= 2
    big = np.iinfo(np.int64).max
    tree = np.full(2 * size, big, np.int64)
    owner = np.full(max(n_cols, 1), -1, np.int64)
    cap = 4 * n + 16
    src = np.empty(cap, np.int64)
    dst = np.empty(cap, np.int64)
    m = 0
    for p in range(n - 1, -1, -1):
        a0 = a[p]
        b0 = b[p]
        cur = big
        col = b0
        while cur > a0 and col < n_cols:
            col = _first_below(tree, size, col, cur)
            if col < 0:
                break
            if m == cap:
                cap *= 2
                src2 = np.empty(cap, np.int64)
                dst2 = np.empty(cap, np.int64)
                src2[:m] = src[:m]
                dst2[:m] = dst[:m]
                src = src2
                dst = dst2
            src[m] = p
            dst[m] = owner[col]
            m += 1
            cur = tree[col + size]
            col += 1
        # p is now the lowest processed point in its column
        owner[b0] = p
        i = b0 + size
        tree[i] = a0
        i >>= 1
        while i >= 1:
            tree[i] = min(tree[2 * i], tree[2 * i + 1])
            i >>= 1
    return src[:m], dst[:m]


# -- encapsulated non-edge counting -------------------------------------------


@njit(cache=True)
def swallowed_counts(order, a, b, n_rows, s0):
    """Cells newly covered (excluding the point itself) as points are added.

    Coordinates are dominance coordinates: the corner after visiting a set of
    points is the domain part of their down-closure.  Row ``r`` of the domain
    starts at column ``max(0, s0 - r)``.  ``cover[r]`` is one past the last
    covered column of row ``r`` and never decreases, so the total work is
    bounded by the number of domain cells.
    """
    n = order.shape[0]
    cover = np.empty(n_rows, np.int64)
    for r in range(n_rows):
        cover[r] = max(0, s0 - r)
    out = np.zeros(n, np.int64)
    for t in range(n):
        p = order[t]
        end = b[p] + 1
        added = 0
        r = a[p]
        # cover is non-increasing in r, so stop at the first row already reaching end
        while r >= 0 and cover[r] < end:
            added += end - cover[r]
            cover[r] = end
            r -= 1
        out[t] = added - 1
    return out


# -- closure step of the grid isotonic regression -----------------------------


@njit(cache=True)
def best_closure(cum, rows, lo, hi, n_total, total, integral):
    """Corner between two nested staircases with the largest excess over the mean.

    ``rows`` lists the rows (in non-increasing end order) where lo < hi.  The
    excess of a cell is ``n_total * D - total`` for integral data and
    ``D - total / n_total`` otherwise.  Returns (gain, count, ends) where
    ``ends[k]`` is the chosen end column of ``rows[k]``; among maximisers the
    smallest corner is returned.
    """
    k_rows = rows.shape[0]
    mean = total / n_total
    width = np.empty(k_rows, np.int64)
    offset = np.empty(k_rows + 1, np.int64)
    offset[0] = 0
    for k in range(k_rows):
        width[k] = hi[k] - lo[k] + 1
        offset[k + 1] = offset[k] + width[k]
    best = np.empty(offset[k_rows], np.float64)
    pm = np.empty(offset[k_rows], np.float64)
    pm_arg = np.empty(offset[k_rows], np.int64)
    for k in range(k_rows - 1, -1, -1):
        r = rows[k]
        base_cum = cum[r, lo[k]]
        for t in range(width[k]):
            e = lo[k] + t
            s = cum[r, e] - base_cum
            if integral:
                g = n_total * s - total * t
            else:
                g = s - mean * t
            if k + 1 < k_rows:
                lim = min(e, hi[k + 1]) - lo[k + 1]
                g += pm[offset[k + 1] + lim]
            best[offset[k] + t] = g
        # prefix maxima with the first (smallest) argmax
        run = best[offset[k]]
        arg = 0
        for t in range(width[k]):
            v = best[offset[k] + t]
            if v > run:
                run = v
                arg = t
            pm[offset[k] + t] = run
            pm_arg[offset[k] + t] = arg
    ends = np.empty(k_rows, np.int64)
    if k_rows == 0:
        return 0.0, 0, ends
    top = pm_arg[offset[0] + width[0] - 1]
    gain = pm[offset[0] + width[0] - 1]
    ends[0] = lo[0] + top
    count = ends[0] - lo[0]
    for k in range(1, k_rows):
        lim = min(ends[k - 1], hi[k]) - lo[k]
        ends[k] = lo[k] + pm_arg[offset[k] + lim]
        count += ends[k] - lo[k]
    return gain, count, ends
