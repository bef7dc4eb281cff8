"""Numba kernels for cluster labeling, crossings, and the space-time model.

Everything here takes flat numpy arrays and returns plain values so the
compiled signatures stay simple.  Union-find uses path halving plus union by
size, which is effectively linear for the graph sizes we run.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True)
def label_components(n_vertices, edges_u, edges_v, open_mask):
    """Open-cluster labels, compacted to 0..k-1 in first-seen order."""
    parent = np.arange(n_vertices, dtype=np.int64)
    size = np.ones(n_vertices, dtype=np.int64)
    for k in range(edges_u.size):
        if open_mask[k]:
            ra = _find(parent, edges_u[k])
            rb = _find(parent, edges_v[k])
            if ra != rb:
                if size[ra] < size[rb]:
                    ra, rb = rb, ra
                parent[rb] = ra
                size[ra] += size[rb]
    labels = np.empty(n_vertices, dtype=np.int64)
    new_id = np.full(n_vertices, -1, dtype=np.int64)
    count = 0
    for i in range(n_vertices):
        r = _find(parent, i)
        if new_id[r] < 0:
            new_id[r] = count
            count += 1
        labels[i] = new_id[r]
    return labels, count


@njit(cache=True)
def cluster_stats(labels, n_clusters, coords):
    """Sizes and axis-aligned bounding boxes per cluster label."""
    sizes = np.zeros(n_clusters, dtype=np.int64)
    bb_min = np.full((n_clusters, 2), np.inf)
    bb_max = np.full((n_clusters, 2), -np.inf)
    for i in range(labels.size):
        c = labels[i]
        sizes[c] += 1
        for d in range(2):
            v = coords[i, d]
            if v < bb_min[c, d]:
                bb_min[c, d] = v
            if v > bb_max[c, d]:
                bb_max[c, d] = v
    return sizes, bb_min, bb_max


@njit(cache=True)
def sides_connected(n_vertices, edges_u, edges_v, open_mask, left_ids, right_ids):
    """1 if an open path joins a left-attached to a right-attached vertex."""
    parent = np.arange(n_vertices + 2, dtype=np.int64)
    size = np.ones(n_vertices + 2, dtype=np.int64)
    left = n_vertices
    right = n_vertices + 1
    for i in range(left_ids.size):
        ra = _find(parent, left_ids[i])
        rb = _find(parent, left)
        if ra != rb:
            if size[ra] < size[rb]:
                ra, rb = rb, ra
            parent[rb] = ra
            size[ra] += size[rb]
    for i in range(right_ids.size):
        ra = _find(parent, right_ids[i])
        rb = _find(parent, right)
        if ra != rb:
            if size[ra] < size[rb]:
                ra, rb = rb, ra
            parent[rb] = ra
            size[ra] += size[rb]
    for k in range(edges_u.size):
        if open_mask[k]:
            ra = _find(parent, edges_u[k])
            rb = _find(parent, edges_v[k])
            if ra != rb:
                if size[ra] < size[rb]:
                    ra, rb = rb, ra
                parent[rb] = ra
                size[ra] += size[rb]
    return 1 if _find(parent, left) == _find(parent, right) else 0


@njit(cache=True)
def spacetime_connected(
    lo,
    hi,
    cuts_flat,
    cuts_ptr,
    side_lo,
    side_hi,
    side_all,
    inner_line,
    inner_y,
    strad_line,
    strad_y,
    strad_side,
):
    """Crossing indicator for the continuum model restricted to a box.

    Lines are indexed 0..m-1 with clipped ranges [lo, hi]; cuts split each
    range into intervals.  Side codes: 0 none, 1 first designated side,
    2 second.  ``side_all`` marks lines lying entirely on a designated side.
    Inner bridges join interval (line, y) to (line+1, y); straddling bridges
    leave the box and attach their inside interval to the side they exit
    through.
    """
    m = lo.size
    iptr = np.empty(m + 1, dtype=np.int64)
    iptr[0] = 0
    for i in range(m):
        iptr[i + 1] = iptr[i] + (cuts_ptr[i + 1] - cuts_ptr[i]) + 1
    total = iptr[m]
    parent = np.arange(total + 2, dtype=np.int64)
    size = np.ones(total + 2, dtype=np.int64)
    side_node = total  # node `total` = side 1, `total + 1` = side 2

    for i in range(m):
        if side_lo[i] > 0:
            ra = _find(parent, iptr[i])
            rb = _find(parent, side_node + side_lo[i] - 1)
            if ra != rb:
                if size[ra] < size[rb]:
                    ra, rb = rb, ra
                parent[rb] = ra
                size[ra] += size[rb]
        if side_hi[i] > 0:
            ra = _find(parent, iptr[i + 1] - 1)
            rb = _find(parent, side_node + side_hi[i] - 1)
            if ra != rb:
                if size[ra] < size[rb]:
                    ra, rb = rb, ra
                parent[rb] = ra
                size[ra] += size[rb]
        if side_all[i] > 0:
            for node in range(iptr[i], iptr[i + 1]):
                ra = _find(parent, node)
                rb = _find(parent, side_node + side_all[i] - 1)
                if ra != rb:
                    if size[ra] < size[rb]:
                        ra, rb = rb, ra
                    parent[rb] = ra
                    size[ra] += size[rb]

    for b in range(inner_line.size):
        i = inner_line[b]
        y = inner_y[b]
        na = iptr[i] + np.searchsorted(cuts_flat[cuts_ptr[i] : cuts_ptr[i + 1]], y)
        nb = iptr[i + 1] + np.searchsorted(
            cuts_flat[cuts_ptr[i + 1] : cuts_ptr[i + 2]], y
        )
        ra = _find(parent, na)
        rb = _find(parent, nb)
        if ra != rb:
            if size[ra] < size[rb]:
                ra, rb = rb, ra
            parent[rb] = ra
            size[ra] += size[rb]

    for b in range(strad_line.size):
        i = strad_line[b]
        y = strad_y[b]
        na = iptr[i] + np.searchsorted(cuts_flat[cuts_ptr[i] : cuts_ptr[i + 1]], y)
        ra = _find(parent, na)
        rb = _find(parent, side_node + strad_side[b] - 1)
        if ra != rb:
            if size[ra] < size[rb]:
                ra, rb = rb, ra
            parent[rb] = ra
            size[ra] += size[rb]

    return 1 if _find(parent, side_node) == _find(parent, side_node + 1) else 0


@njit(cache=True)
def _bi_connected(indptr, nbr_v, nbr_e, open_state, skip_edge, u, v,
                  mark_a, mark_b, queue_a, queue_b, stamp):
    """Are u and v joined by open edges other than skip_edge?

    Bidirectional search expanding the side with less pending work; stamp
    arrays avoid clearing visited marks between queries.
    """
    if u == v:
        return True
    mark_a[u] = stamp
    queue_a[0] = u
    head_a, tail_a = 0, 1
    mark_b[v] = stamp
    queue_b[0] = v
    head_b, tail_b = 0, 1
    while head_a < tail_a and head_b < tail_b:
        if tail_a - head_a <= tail_b - head_b:
            x = queue_a[head_a]
            head_a += 1
            for k in range(indptr[x], indptr[x + 1]):
                e = nbr_e[k]
                if e == skip_edge or not open_state[e]:
                    continue
                y = nbr_v[k]
                if mark_a[y] == stamp:
                    continue
                if mark_b[y] == stamp:
                    return True
                mark_a[y] = stamp
                queue_a[tail_a] = y
                tail_a += 1
        else:
            x = queue_b[head_b]
            head_b += 1
            for k in range(indptr[x], indptr[x + 1]):
                e = nbr_e[k]
                if e == skip_edge or not open_state[e]:
                    continue
                y = nbr_v[k]
                if mark_b[y] == stamp:
                    continue
                if mark_a[y] == stamp:
                    return True
                mark_b[y] = stamp
                queue_b[tail_b] = y
                tail_b += 1
    return False


@njit(cache=True)
def rc_sweeps(indptr, nbr_v, nbr_e, edges_u, edges_v, open_state,
              p_conn, p_disc, uniforms, masks_out, record):
    """Heat-bath sweeps over all edges in index order, in place.

    uniforms has one row per sweep; when record is true the post-sweep
    configuration is packed into masks_out (edge count must fit an int64).
    Edges whose two conditional probabilities coincide (q = 1) skip the
    connectivity query entirely.
    """
    n = len(indptr) - 1
    n_edges = len(edges_u)
    mark_a = np.zeros(n, dtype=np.int64)
    mark_b = np.zeros(n, dtype=np.int64)
    queue_a = np.empty(n, dtype=np.int64)
    queue_b = np.empty(n, dtype=np.int64)
    stamp = 0
    for s in range(uniforms.shape[0]):
        for e in range(n_edges):
            u = uniforms[s, e]
            if p_conn[e] == p_disc[e]:
                open_state[e] = u < p_conn[e]
                continue
            stamp += 1
            if _bi_connected(indptr, nbr_v, nbr_e, open_state, e,
                             edges_u[e], edges_v[e],
                             mark_a, mark_b, queue_a, queue_b, stamp):
                open_state[e] = u < p_conn[e]
            else:
                open_state[e] = u < p_disc[e]
        if record:
            m = np.int64(0)
            for e in range(n_edges):
                if open_state[e]:
                    m |= np.int64(1) << e
            masks_out[s] = m
    return stamp


@njit(cache=True)
def rc_enumerate_logw(n_vertices, edges_u, edges_v, log_p, log_1mp, log_q):
    """Log weight of every edge configuration, indexed by open-edge bitmask."""
    n_edges = len(edges_u)
    out = np.empty(1 << n_edges)
    parent = np.empty(n_vertices, dtype=np.int64)
    for mask in range(1 << n_edges):
        for i in range(n_vertices):
            parent[i] = i
        k = n_vertices
        logw = 0.0
        for e in range(n_edges):
            if mask & (1 << e):
                logw += log_p[e]
                ru = _find(parent, edges_u[e])
                rv = _find(parent, edges_v[e])
                if ru != rv:
                    parent[ru] = rv
                    k -= 1
            else:
                logw += log_1mp[e]
        out[mask] = logw + k * log_q
    return out
