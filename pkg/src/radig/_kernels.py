"""Compiled kernels for graph founding and RNN agglomeration over flat arrays.

The merge loop is a transcription of :class:`radig.agglomerate.RnnAgglomerator` that keeps
clusters, boundaries and adjacency lists in numpy arrays. Every floating
point expression follows the reference code operation for operation, so both
engines produce bit-identical merge sequences.

Adjacency lists live in one pool: cluster ``c`` owns entries
``start[c]:start[c] + count[c]``, sorted by neighbour id. A merge rewrites each
neighbour's list in place (it loses one or two entries and gains one) and
appends the parent's list at the end of the pool.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _grow(a, n):
    out = np.empty(max(n, 2 * len(a)), dtype=a.dtype)
    out[: len(a)] = a
    return out


@njit(cache=True)
def _distance(area, mean, sigma, p, q, length, contrast, flags, eps, weights):
    # mirrors radig.distance.cluster_distance
    total = 0.0
    if flags[0]:
        if flags[3]:
            w = (
                abs(mean[p, 0] - mean[q, 0])
                + abs(mean[p, 1] - mean[q, 1])
                + abs(mean[p, 2] - mean[q, 2])
                + abs((sigma[p, 0] + sigma[p, 1] + sigma[p, 2]) - (sigma[q, 0] + sigma[q, 1] + sigma[q, 2]))
            )
            gap = w * w
        else:
            d0 = mean[p, 0] - mean[q, 0]
            d1 = mean[p, 1] - mean[q, 1]
            d2 = mean[p, 2] - mean[q, 2]
            gap = d0 * d0 + d1 * d1 + d2 * d2
        omega = gap / (1.0 / area[p] + 1.0 / area[q])
        total += weights[0] * math.log(omega if omega > eps else eps)
    if flags[1]:
        total += weights[1] * math.log(contrast if contrast > eps else eps)
    if flags[2]:
        if not length > 0:
            raise ValueError("boundary has non-positive length")
        eta = math.sqrt(math.sqrt(area[p] * area[q])) / length
        total += weights[2] * math.log(eta if eta > eps else eps)
    return total


@njit(cache=True)
def boundary_terms(area, mean, sigma, lo, hi, length, flank, flags, eps, weights, contrast_from_flank):
    """Initial contrast and distance of every atomic boundary.

    Mirrors ``init_contrast`` and ``cluster_distance`` with ``p = lo`` and
    ``q = hi``; ``flank`` holds the gradient-mean contrasts when
    ``contrast_from_flank`` is set.
    """
    nb = len(lo)
    contrast = np.empty(nb)
    dist = np.empty(nb)
    for k in range(nb):
        p = lo[k]
        q = hi[k]
        if contrast_from_flank:
            contrast[k] = flank[k]
        elif flags[3]:
            contrast[k] = (
                abs(mean[p, 0] - mean[q, 0])
                + abs(mean[p, 1] - mean[q, 1])
                + abs(mean[p, 2] - mean[q, 2])
                + abs((sigma[p, 0] + sigma[p, 1] + sigma[p, 2]) - (sigma[q, 0] + sigma[q, 1] + sigma[q, 2]))
            )
        else:
            d0 = mean[p, 0] - mean[q, 0]
            d1 = mean[p, 1] - mean[q, 1]
            d2 = mean[p, 2] - mean[q, 2]
            contrast[k] = math.sqrt(d0 * d0 + d1 * d1 + d2 * d2)
        dist[k] = _distance(area, mean, sigma, p, q, length[k], contrast[k], flags, eps, weights)
    return contrast, dist


@njit(cache=True)
def _nearest(adj_d, s, n):
    best = -1
    best_d = math.inf
    for k in range(n):
        if adj_d[s + k] < best_d:
            best_d = adj_d[s + k]
            best = k
    return best


# --- heap of RNN pairs keyed by (distance, low id, high id) ---------------------------


@njit(cache=True)
def _less(hd, hlo, hhi, i, j):
    if hd[i] != hd[j]:
        return hd[i] < hd[j]
    if hlo[i] != hlo[j]:
        return hlo[i] < hlo[j]
    return hhi[i] < hhi[j]


@njit(cache=True)
def _swap(hd, hlo, hhi, hpos, i, j):
    hd[i], hd[j] = hd[j], hd[i]
    hlo[i], hlo[j] = hlo[j], hlo[i]
    hhi[i], hhi[j] = hhi[j], hhi[i]
    hpos[hlo[i]] = i
    hpos[hhi[i]] = i
    hpos[hlo[j]] = j
    hpos[hhi[j]] = j


@njit(cache=True)
def _sift_up(hd, hlo, hhi, hpos, i):
    while i > 0:
        up = (i - 1) // 2
        if _less(hd, hlo, hhi, i, up):
            _swap(hd, hlo, hhi, hpos, i, up)
            i = up
        else:
            break


@njit(cache=True)
def _sift_down(hd, hlo, hhi, hpos, i, size):
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        best = left
        if left + 1 < size and _less(hd, hlo, hhi, left + 1, left):
            best = left + 1
        if _less(hd, hlo, hhi, best, i):
            _swap(hd, hlo, hhi, hpos, i, best)
            i = best
        else:
            break


@njit(cache=True)
def _remove_at(hd, hlo, hhi, hpos, i, size):
    """Remove heap slot ``i``; returns the new size."""
    hpos[hlo[i]] = -1
    hpos[hhi[i]] = -1
    last = size - 1
    if i != last:
        hd[i] = hd[last]
        hlo[i] = hlo[last]
        hhi[i] = hhi[last]
        hpos[hlo[i]] = i
        hpos[hhi[i]] = i
        _sift_down(hd, hlo, hhi, hpos, i, last)
        _sift_up(hd, hlo, hhi, hpos, i)
    return last


@njit(cache=True)
def _nn_id(adj_n, start, nn, c):
    return adj_n[start[c] + nn[c]] if nn[c] >= 0 else -1


@njit(cache=True)
def _refresh(affected, n_aff, alive, adj_n, adj_d, start, nn, hd, hlo, hhi, hpos, size):
    for k in range(n_aff):
        c = affected[k]
        h = hpos[c]
        if h < 0:
            continue
        partner = hhi[h] if hlo[h] == c else hlo[h]
        if not (
            alive[c]
            and alive[partner]
            and _nn_id(adj_n, start, nn, c) == partner
            and _nn_id(adj_n, start, nn, partner) == c
        ):
            size = _remove_at(hd, hlo, hhi, hpos, h, size)
    for k in range(n_aff):
        c = affected[k]
        if not alive[c] or nn[c] < 0 or hpos[c] >= 0:
            continue
        other = adj_n[start[c] + nn[c]]
        if _nn_id(adj_n, start, nn, other) == c:
            hd[size] = adj_d[start[c] + nn[c]]
            hlo[size] = min(c, other)
            hhi[size] = max(c, other)
            hpos[c] = size
            hpos[other] = size
            size += 1
            _sift_up(hd, hlo, hhi, hpos, size - 1)
    return size


@njit(cache=True)
def _audit(n_total, alive, area, mean, sigma, adj_n, adj_b, adj_d, start, count, nn,
           blen, bcon, flags, eps, weights, hlo, hhi, hpos, size, live):
    """Recompute every distance and the RNN set from scratch; return 1 on any mismatch."""
    true_nn = np.full(n_total, -1, dtype=np.int64)
    for c in range(n_total):
        if not alive[c]:
            continue
        s = start[c]
        best_d = math.inf
        for k in range(count[c]):
            o = adj_n[s + k]
            if not alive[o] or o == c or (k > 0 and adj_n[s + k - 1] >= o):
                return 1
            d = _distance(area, mean, sigma, c, o, blen[adj_b[s + k]], bcon[adj_b[s + k]], flags, eps, weights)
            if d != adj_d[s + k]:
                return 1
            if d < best_d:
                best_d = d
                true_nn[c] = o
        if _nn_id(adj_n, start, nn, c) != true_nn[c]:
            return 1
    pairs = 0
    for c in range(n_total):
        o = true_nn[c]
        if o > c and true_nn[o] == c:
            pairs += 1
            h = hpos[c]
            if h < 0 or hlo[h] != c or hhi[h] != o:
                return 1
    if pairs != size or 2 * size > live:
        return 1
    return 0


@njit(cache=True)
def rnn_agglomerate(area0, mean0, sigma0, adj_n0, adj_b0, adj_d0, count0, blen0, bcon0, flags, eps, weights, audit):
    """Run the merge loop; see :func:`radig.agglomerate.agglomerate_compiled`."""
    n = len(area0)
    n_total = max(2 * n - 1, 1)
    area = np.zeros(n_total, dtype=np.int64)
    mean = np.zeros((n_total, 3))
    sigma = np.zeros((n_total, 3))
    area[:n] = area0
    mean[:n] = mean0
    sigma[:n] = sigma0
    alive = np.zeros(n_total, dtype=np.bool_)
    alive[:n] = True
    parent = np.full(n_total, -1, dtype=np.int64)
    left = np.full(n_total, -1, dtype=np.int64)
    right = np.full(n_total, -1, dtype=np.int64)

    start = np.zeros(n_total, dtype=np.int64)
    count = np.zeros(n_total, dtype=np.int64)
    nn = np.full(n_total, -1, dtype=np.int64)
    top = 0
    for c in range(n):
        start[c] = top
        count[c] = count0[c]
        top += count0[c]
    cap = max(2 * top, 16)
    adj_n = np.empty(cap, dtype=np.int64)
    adj_b = np.empty(cap, dtype=np.int64)
    adj_d = np.empty(cap)
    adj_n[:top] = adj_n0
    adj_b[:top] = adj_b0
    adj_d[:top] = adj_d0
    for c in range(n):
        nn[c] = _nearest(adj_d, start[c], count[c])

    nb = len(blen0)
    bcap = max(2 * nb, 16)
    blen = np.empty(bcap)
    bcon = np.empty(bcap)
    bpar = np.full(bcap, -1, dtype=np.int64)
    blen[:nb] = blen0
    bcon[:nb] = bcon0

    hd = np.empty(n)
    hlo = np.empty(n, dtype=np.int64)
    hhi = np.empty(n, dtype=np.int64)
    hpos = np.full(n_total, -1, dtype=np.int64)
    size = 0
    affected = np.empty(n_total, dtype=np.int64)
    for c in range(n):
        affected[c] = c
    size = _refresh(affected, n, alive, adj_n, adj_d, start, nn, hd, hlo, hhi, hpos, size)

    ev_left = np.empty(max(n - 1, 0), dtype=np.int64)
    ev_right = np.empty(max(n - 1, 0), dtype=np.int64)
    ev_dist = np.empty(max(n - 1, 0))
    ev_bound = np.empty(max(n - 1, 0), dtype=np.int64)
    live = n
    faults = 0
    if audit:
        faults += _audit(n, alive, area, mean, sigma, adj_n, adj_b, adj_d, start, count, nn,
                         blen, bcon, flags, eps, weights, hlo, hhi, hpos, size, live)
    t = 0
    while size > 0:
        dist = hd[0]
        a = hlo[0]
        b = hhi[0]
        size = _remove_at(hd, hlo, hhi, hpos, 0, size)
        pid = n + t
        sa, na = start[a], count[a]
        sb, nbr = start[b], count[b]
        for k in range(na):
            if adj_n[sa + k] == b:
                ev_bound[t] = adj_b[sa + k]
                break

        # parent statistics, as radig.graph.merge_stats
        a1 = area[a]
        a2 = area[b]
        tot = a1 + a2
        w2 = a2 / tot
        cross = a1 * a2 / tot
        for ch in range(3):
            m1 = mean[a, ch]
            delta = mean[b, ch] - m1
            mean[pid, ch] = m1 + delta * w2
            s1c = sigma[a, ch]
            s2c = sigma[b, ch]
            m2 = s1c * s1c * a1 + s2c * s2c * a2 + delta * delta * cross
            sigma[pid, ch] = math.sqrt(m2 / tot)
        area[pid] = tot
        left[pid] = a
        right[pid] = b
        parent[a] = pid
        parent[b] = pid
        alive[a] = False
        alive[b] = False

        # merged adjacency of the parent, written at the end of the pool
        if top + na + nbr > cap:
            cap = max(2 * cap, top + na + nbr)
            adj_n = _grow(adj_n, cap)
            adj_b = _grow(adj_b, cap)
            adj_d = _grow(adj_d, cap)
        sp = top
        m = 0
        i = 0
        j = 0
        while i < na or j < nbr:
            if j >= nbr or (i < na and adj_n[sa + i] < adj_n[sb + j]):
                nid = adj_n[sa + i]
                bid = adj_b[sa + i]
                i += 1
                if nid == b:
                    continue
            elif i >= na or adj_n[sb + j] < adj_n[sa + i]:
                nid = adj_n[sb + j]
                bid = adj_b[sb + j]
                j += 1
                if nid == a:
                    continue
            else:
                nid = adj_n[sa + i]
                b1 = adj_b[sa + i]
                b2 = adj_b[sb + j]
                if nb >= len(blen):
                    blen = _grow(blen, nb + 1)
                    bcon = _grow(bcon, nb + 1)
                    bpar = _grow(bpar, nb + 1)
                    bpar[nb:] = -1
                l1 = blen[b1]
                c1 = bcon[b1]
                l2 = blen[b2]
                c2 = bcon[b2]
                blen[nb] = l1 + l2
                if c1 == 0.0 or c2 == 0.0:
                    bcon[nb] = 0.0
                else:
                    bcon[nb] = (l1 + l2) / (l1 / c1 + l2 / c2)
                bpar[b1] = nb
                bpar[b2] = nb
                bid = nb
                nb += 1
                i += 1
                j += 1
            adj_n[sp + m] = nid
            adj_b[sp + m] = bid
            m += 1
        top += m
        start[pid] = sp
        count[pid] = m
        alive[pid] = True
        count[a] = 0
        count[b] = 0
        nn[a] = -1
        nn[b] = -1

        for k in range(m):
            o = adj_n[sp + k]
            bid = adj_b[sp + k]
            d = _distance(area, mean, sigma, pid, o, blen[bid], bcon[bid], flags, eps, weights)
            adj_d[sp + k] = d
            # neighbour list: drop a and b, append the parent (the largest id)
            so = start[o]
            old_nn_id = adj_n[so + nn[o]]
            old_nn_d = adj_d[so + nn[o]]
            w = 0
            new_nn = -1
            for r in range(count[o]):
                x = adj_n[so + r]
                if x == a or x == b:
                    continue
                if x == old_nn_id:
                    new_nn = w
                adj_n[so + w] = x
                adj_b[so + w] = adj_b[so + r]
                adj_d[so + w] = adj_d[so + r]
                w += 1
            adj_n[so + w] = pid
            adj_b[so + w] = bid
            adj_d[so + w] = d
            w += 1
            count[o] = w
            if old_nn_id == a or old_nn_id == b:
                nn[o] = _nearest(adj_d, so, w)
            elif d < old_nn_d:
                nn[o] = w - 1
            else:
                nn[o] = new_nn
        nn[pid] = _nearest(adj_d, sp, m)

        affected[0] = pid
        for k in range(m):
            affected[k + 1] = adj_n[sp + k]
        size = _refresh(affected, m + 1, alive, adj_n, adj_d, start, nn, hd, hlo, hhi, hpos, size)

        ev_left[t] = a
        ev_right[t] = b
        ev_dist[t] = dist
        t += 1
        live -= 1
        if audit:
            faults += _audit(n + t, alive, area, mean, sigma, adj_n, adj_b, adj_d, start, count, nn,
                             blen, bcon, flags, eps, weights, hlo, hhi, hpos, size, live)

    used = n + t
    return (
        t,
        ev_left[:t],
        ev_right[:t],
        ev_dist[:t],
        ev_bound[:t],
        area[:used],
        mean[:used],
        sigma[:used],
        alive[:used],
        parent[:used],
        left[:used],
        right[:used],
        blen[:nb],
        bcon[:nb],
        bpar[:nb],
        faults,
    )
