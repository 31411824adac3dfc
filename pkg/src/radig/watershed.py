"""Hill-climbing watershed producing the atomic oversegmentation.

Every pixel points at its steepest-descent 4-neighbour; pixels inside a
descending plateau point towards the plateau's exits along geodesic shortest
paths; regional-minimum plateaus become seeds. Following the pointers labels
every pixel in O(n). There are no watershed-line pixels.
"""

import numpy as np
from numba import njit

from ._validation import check_plane

# neighbour offsets in raster order: up, left, right, down
_DY = np.array([-1, 0, 0, 1], dtype=np.int64)
_DX = np.array([0, -1, 1, 0], dtype=np.int64)


@njit(cache=True)
def _watershed_flat(g, h, w):
    n = h * w
    plateau = np.full(n, -1, dtype=np.int64)
    target = np.full(n, -1, dtype=np.int64)
    labels = np.full(n, -1, dtype=np.int64)
    dist = np.zeros(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    members = np.empty(n, dtype=np.int64)
    nseeds = 0
    nplateaus = 0

    # steepest descent pointer for every pixel that has a strictly lower neighbour
    for p in range(n):
        y = p // w
        x = p - y * w
        best = g[p]
        bq = -1
        for k in range(4):
            yy = y + _DY[k]
            xx = x + _DX[k]
            if yy < 0 or yy >= h or xx < 0 or xx >= w:
                continue
            q = yy * w + xx
            if g[q] < best:
                best = g[q]
                bq = q
        target[p] = bq

    for start in range(n):
        if plateau[start] >= 0:
            continue
        # collect the plateau containing `start`
        value = g[start]
        plateau[start] = nplateaus
        members[0] = start
        count = 1
        head = 0
        descending = False
        while head < count:
            p = members[head]
            head += 1
            if target[p] >= 0:
                descending = True
            y = p // w
            x = p - y * w
            for k in range(4):
                yy = y + _DY[k]
                xx = x + _DX[k]
                if yy < 0 or yy >= h or xx < 0 or xx >= w:
                    continue
                q = yy * w + xx
                if plateau[q] < 0 and g[q] == value:
                    plateau[q] = nplateaus
                    members[count] = q
                    count += 1
        pid = nplateaus
        nplateaus += 1

        if not descending:
            for i in range(count):
                labels[members[i]] = nseeds
            nseeds += 1
            continue
        if count == 1:
            continue

        # geodesic distance from the exits, seeded in raster order
        qhead = 0
        qtail = 0
        sorted_members = np.sort(members[:count])
        for i in range(count):
            p = sorted_members[i]
            if target[p] >= 0:
                dist[p] = 0
                queue[qtail] = p
                qtail += 1
            else:
                dist[p] = -1
        while qhead < qtail:
            p = queue[qhead]
            qhead += 1
            y = p // w
            x = p - y * w
            for k in range(4):
                yy = y + _DY[k]
                xx = x + _DX[k]
                if yy < 0 or yy >= h or xx < 0 or xx >= w:
                    continue
                q = yy * w + xx
                if plateau[q] == pid and dist[q] < 0:
                    dist[q] = dist[p] + 1
                    queue[qtail] = q
                    qtail += 1
        # interior pixels step to the raster-earliest neighbour one step closer
        for i in range(count):
            p = sorted_members[i]
            if target[p] >= 0:
                continue
            y = p // w
            x = p - y * w
            for k in range(4):
                yy = y + _DY[k]
                xx = x + _DX[k]
                if yy < 0 or yy >= h or xx < 0 or xx >= w:
                    continue
                q = yy * w + xx
                if plateau[q] == pid and dist[q] == dist[p] - 1:
                    target[p] = q
                    break

    # follow pointers, labelling whole paths at once
    for p in range(n):
        if labels[p] >= 0:
            continue
        length = 0
        q = p
        while labels[q] < 0:
            queue[length] = q
            length += 1
            q = target[q]
        lab = labels[q]
        for i in range(length):
            labels[queue[i]] = lab
    return labels, nseeds


def watershed(gradient):
    """Label the basins of ``gradient`` (float plane) with ids ``0..R-1``.

    Seeds are numbered in raster order of each minimum plateau's first pixel.
    Equal-height ties go to the neighbour earliest in raster order.
    """
    g = check_plane(gradient, "gradient")
    h, w = g.shape
    labels, _ = _watershed_flat(np.ascontiguousarray(g).ravel(), h, w)
    return labels.reshape(h, w)


def region_count(labels):
    return int(labels.max()) + 1 if labels.size else 0


def is_valid_label_map(labels):
    """True if labels are dense ``0..R-1`` and every region is 4-connected."""
    from scipy import ndimage

    labels = np.asarray(labels)
    if labels.ndim != 2 or labels.min() < 0:
        return False
    nreg = int(labels.max()) + 1
    if np.any(np.bincount(labels.ravel(), minlength=nreg) == 0):
        return False
    structure = ndimage.generate_binary_structure(2, 1)
    slices = ndimage.find_objects(labels + 1)
    for lab, sl in enumerate(slices):
        _, ncomp = ndimage.label(labels[sl] == lab, structure=structure)
        if ncomp != 1:
            return False
    return True
