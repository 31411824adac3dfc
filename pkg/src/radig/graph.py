"""Founding of the region adjacency graph from an atomic label map.

One pass over the image gathers area, colour moments and the cracks between
4-adjacent pixels of different labels. Crack segments that turn a corner are
counted as half-diagonals (length sqrt(2)/2) so that boundary lengths
approximate the Euclidean contour length rather than the L1 one.
"""

import math

import numpy as np

from ._kernels import boundary_terms
from ._validation import DimensionError, check_label_map, check_lab_image, check_same_shape
from .distance import DEFAULT_CONFIG
from .structures import Boundary, Cluster, ColorStats

HALF_DIAGONAL = math.sqrt(2.0) / 2.0
MIN_BOUNDARY_LENGTH = 0.1


class RegionGraph:
    """Indexed clusters and boundaries over an atomic label map.

    Leaves are ``clusters[0:atom_count]``; agglomeration appends internal
    nodes. ``atom_pairs`` lists the ``(low, high)`` label pair of each atomic
    boundary, indexed by boundary id.
    """

    def __init__(self, labels, clusters, boundaries, atom_pairs, shape=None):
        self.labels = labels
        self.shape = tuple(labels.shape) if labels is not None else tuple(shape)
        self.clusters = clusters
        self.boundaries = boundaries
        self.atom_count = len(clusters)
        self.atom_pairs = atom_pairs

    def live_clusters(self):
        return [c for c in self.clusters if c.alive]

    def mean_degree(self):
        live = self.live_clusters()
        if not live:
            return 0.0
        return sum(len(c.adjacency) for c in live) / len(live)

    def check_invariants(self):
        """Raise AssertionError if adjacency symmetry, ordering or bookmarks are broken."""
        for c in self.clusters:
            if not c.alive:
                continue
            ids = [e[0] for e in c.adjacency]
            assert ids == sorted(set(ids)), f"cluster {c.id}: adjacency not strictly sorted"
            assert c.id not in ids, f"cluster {c.id}: self edge"
            for nid, bid, dist in c.adjacency:
                other = self.clusters[nid]
                assert other.alive, f"cluster {c.id} lists dead neighbour {nid}"
                back = [e for e in other.adjacency if e[0] == c.id]
                assert back == [(c.id, bid, dist)], f"asymmetric link {c.id}-{nid}"
                assert self.boundaries[bid].length > 0
            assert c.nn_index == nearest_index(c.adjacency), f"cluster {c.id}: stale nn_index"


def nearest_index(adjacency):
    """Position of the minimum-distance entry; ties go to the smaller neighbour id."""
    best = -1
    best_d = math.inf
    for pos, entry in enumerate(adjacency):
        if entry[2] < best_d:
            best_d = entry[2]
            best = pos
    return best


def diagonal_shorten_check(i, j, k, l):
    """True if the crack between labels ``i`` and ``j`` is part of a diagonal.

    ``k`` and ``l`` are the labels next to ``i`` and ``j`` on the far side of
    the 2x2 window (below a vertical crack, right of a horizontal one). Pass
    None for a window clipped by the image border.
    """
    if k is None or l is None:
        return False
    return i == l or j == k


def fit_stats(pixels):
    """ML Gaussian fit (population std) of an (N, 3) array of Lab samples."""
    pixels = np.asarray(pixels, dtype=np.float64).reshape(-1, 3)
    mean = pixels.mean(axis=0)
    sigma = np.sqrt(((pixels - mean) ** 2).mean(axis=0))
    return ColorStats(tuple(mean.tolist()), tuple(sigma.tolist()))


def merge_stats(s1, a1, s2, a2):
    """Combine two Gaussian fits of disjoint pixel sets in constant time."""
    n = a1 + a2
    w2 = a2 / n
    cross = a1 * a2 / n
    mean = []
    sigma = []
    for c in range(3):
        m1 = s1.mean[c]
        delta = s2.mean[c] - m1
        mean.append(m1 + delta * w2)
        s1c = s1.sigma[c]
        s2c = s2.sigma[c]
        m2 = s1c * s1c * a1 + s2c * s2c * a2 + delta * delta * cross
        sigma.append(math.sqrt(m2 / n))
    return ColorStats(tuple(mean), tuple(sigma))


def _crack_tables(labels, shorten):
    """Return (low, high, length, flat index of both flanking pixels) for every crack."""
    h, w = labels.shape
    idx = np.arange(h * w).reshape(h, w)

    # vertical cracks: i left, j right, k below i, l below j
    i = labels[:, :-1]
    j = labels[:, 1:]
    diag = np.zeros(i.shape, dtype=bool)
    if shorten:
        diag[:-1] = (i[:-1] == labels[1:, 1:]) | (j[:-1] == labels[1:, :-1])
    vmask = i != j
    v = (i[vmask], j[vmask], diag[vmask], idx[:, :-1][vmask], idx[:, 1:][vmask])

    # horizontal cracks: i above, j below, k right of i, l right of j
    i = labels[:-1, :]
    j = labels[1:, :]
    diag = np.zeros(i.shape, dtype=bool)
    if shorten:
        diag[:, :-1] = (i[:, :-1] == labels[1:, 1:]) | (j[:, :-1] == labels[:-1, 1:])
    hmask = i != j
    hz = (i[hmask], j[hmask], diag[hmask], idx[:-1, :][hmask], idx[1:, :][hmask])

    a = np.concatenate([v[0], hz[0]])
    b = np.concatenate([v[1], hz[1]])
    flagged = np.concatenate([v[2], hz[2]])
    pa = np.concatenate([v[3], hz[3]])
    pb = np.concatenate([v[4], hz[4]])
    length = np.where(flagged, HALF_DIAGONAL, 1.0)
    return np.minimum(a, b), np.maximum(a, b), length, pa, pb


def found_graph(labels, lab, cfg=DEFAULT_CONFIG, gradient=None):
    """Build the :class:`RegionGraph` for ``labels`` over the Lab image ``lab``.

    Boundary ids are ordered by (high label, low label): the order in which a
    raster scan that files each crack under its higher label, followed by a
    pass appending back-links in increasing cluster order, produces sorted
    adjacency lists.
    """
    labels = check_label_map(labels)
    lab_arr = check_lab_image(lab)
    check_same_shape(labels, lab_arr, "label map and Lab image")
    if cfg.contrast_init == "gradient_mean":
        if gradient is None:
            raise ValueError("gradient_mean contrast initialisation needs the gradient magnitude")
        gradient = np.asarray(gradient, dtype=np.float64)
        check_same_shape(labels, gradient, "label map and gradient")

    nreg = int(labels.max()) + 1
    flat = labels.ravel()
    pixels = lab_arr.reshape(-1, 3)
    area = np.bincount(flat, minlength=nreg)
    means = np.empty((nreg, 3))
    m2 = np.empty((nreg, 3))
    for c in range(3):
        means[:, c] = np.bincount(flat, weights=pixels[:, c], minlength=nreg) / area
    dev = pixels - means[flat]
    for c in range(3):
        m2[:, c] = np.bincount(flat, weights=dev[:, c] * dev[:, c], minlength=nreg)
    sigmas = np.sqrt(m2 / area[:, None])

    clusters = [
        Cluster(cid, a, ColorStats(tuple(mu), tuple(sd)))
        for cid, (a, mu, sd) in enumerate(zip(area.tolist(), means.tolist(), sigmas.tolist()))
    ]

    lo, hi, length, pa, pb = _crack_tables(labels, cfg.length_norm == "l2_approx")
    keys = hi.astype(np.int64) * nreg + lo
    pair_keys, inverse = np.unique(keys, return_inverse=True)
    nb = len(pair_keys)
    lengths = np.bincount(inverse, weights=length, minlength=nb)
    lengths = np.maximum(lengths, MIN_BOUNDARY_LENGTH)
    flank = None
    if cfg.contrast_init == "gradient_mean":
        g = gradient.ravel()
        counts = np.bincount(inverse, minlength=nb)
        flank = np.bincount(inverse, weights=g[pa] + g[pb], minlength=nb) / (2.0 * counts)
    pair_lo = pair_keys % nreg
    pair_hi = pair_keys // nreg
    flags, eps, weights = cfg.kernel_args()
    contrast, dist = boundary_terms(
        area.astype(np.int64),
        means,
        sigmas,
        pair_lo,
        pair_hi,
        lengths,
        flank if flank is not None else lengths,
        flags,
        eps,
        weights,
        flank is not None,
    )
    boundaries = [
        Boundary(bid, length, c) for bid, (length, c) in enumerate(zip(lengths.tolist(), contrast.tolist()))
    ]

    # pairs are sorted by (high, low): appending in this order keeps every
    # adjacency list sorted (lower neighbours first, then higher ones)
    for bid, (lo, hi, d) in enumerate(zip(pair_lo.tolist(), pair_hi.tolist(), dist.tolist())):
        clusters[hi].adjacency.append((lo, bid, d))
        clusters[lo].adjacency.append((hi, bid, d))
    for c in clusters:
        c.nn_index = nearest_index(c.adjacency)

    atom_pairs = np.stack([pair_lo, pair_hi], axis=1)
    return RegionGraph(labels, clusters, boundaries, atom_pairs)


def cluster_perimeters(graph):
    """Total boundary length per atomic cluster."""
    total = np.zeros(graph.atom_count)
    for bid, (lo, hi) in enumerate(graph.atom_pairs.tolist()):
        total[lo] += graph.boundaries[bid].length
        total[hi] += graph.boundaries[bid].length
    return total

