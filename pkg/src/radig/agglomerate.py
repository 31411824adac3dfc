"""Greedy agglomeration over the region graph using reciprocal nearest neighbours.

Only reciprocal-nearest-neighbour (RNN) pairs are kept in the candidate heap.
The globally closest pair is always an RNN pair, so popping the heap minimum
reproduces exhaustive greedy merging while the heap stays far smaller than
the number of live clusters.
"""

import logging
from bisect import bisect_left
from typing import NamedTuple

import numpy as np

from ._kernels import rnn_agglomerate
from .distance import DEFAULT_CONFIG, cluster_distance, concat_boundaries
from .graph import merge_stats, nearest_index
from .heap import IndexedHeap
from .structures import Boundary, Cluster, ColorStats

logger = logging.getLogger(__name__)


class MergeEvent(NamedTuple):
    time: int
    left: int
    right: int
    parent: int
    distance: float


class ConnectivityError(RuntimeError):
    """The region graph had several connected components.

    Each component was agglomerated to its own root; ``hierarchy`` holds the
    resulting forest and ``roots`` the component roots.
    """

    def __init__(self, n_components, hierarchy, roots):
        super().__init__(f"region graph is disconnected: {n_components} components")
        self.n_components = n_components
        self.hierarchy = hierarchy
        self.roots = roots


class Hierarchy:
    """Binary merge tree: all clusters (leaves and internal), boundaries, merge log."""

    def __init__(self, graph, events, root, event_boundaries=None):
        self.graph = graph
        self.events = events
        self.root = root
        # boundary id separating the two children of each event
        self.event_boundaries = event_boundaries

    @property
    def clusters(self):
        return self.graph.clusters

    @property
    def atom_count(self):
        return self.graph.atom_count

    @property
    def labels(self):
        return self.graph.labels

    @property
    def shape(self):
        return self.graph.shape

    def distances(self):
        return [e.distance for e in self.events]

    def __repr__(self):
        return f"Hierarchy(atoms={self.atom_count}, events={len(self.events)}, root={self.root})"


def merge_adjacency(p, q, boundaries):
    """Linear merge of two sorted adjacency lists, dropping the p-q link.

    A neighbour listed by both children gets a single concatenated boundary,
    appended to ``boundaries``. Returns sorted ``(neighbor_id, boundary_id)``.
    """
    a, b = p.adjacency, q.adjacency
    na, nb = len(a), len(b)
    i = j = 0
    out = []
    while i < na or j < nb:
        if j >= nb or (i < na and a[i][0] < b[j][0]):
            nid, bid = a[i][0], a[i][1]
            i += 1
            if nid != q.id:
                out.append((nid, bid))
        elif i >= na or b[j][0] < a[i][0]:
            nid, bid = b[j][0], b[j][1]
            j += 1
            if nid != p.id:
                out.append((nid, bid))
        else:
            nid = a[i][0]
            merged = concat_boundaries(boundaries[a[i][1]], boundaries[b[j][1]], len(boundaries))
            boundaries.append(merged)
            out.append((nid, merged.id))
            i += 1
            j += 1
    return out


def pair_key(distance, i, j):
    """Heap key: distance, then lexicographic (min id, max id)."""
    return (distance, i, j) if i < j else (distance, j, i)


class RnnAgglomerator:
    """Stateful merge loop; :func:`agglomerate` is the usual entry point.

    ``pair_of`` maps a cluster id to ``(heap handle, partner id)`` for every
    cluster currently in a queued RNN pair.
    """

    def __init__(self, graph, cfg=DEFAULT_CONFIG):
        self.graph = graph
        self.cfg = cfg
        self.queue = IndexedHeap()
        self.pair_of = {}
        self.events = []
        self.event_boundaries = []
        self.live = sum(1 for c in graph.clusters if c.alive)
        self.refresh_rnn([c.id for c in graph.clusters if c.alive])

    def nn_id(self, cid):
        c = self.graph.clusters[cid]
        return c.adjacency[c.nn_index][0] if c.nn_index >= 0 else None

    def refresh_rnn(self, affected):
        """Drop queued pairs that stopped being reciprocal and queue new RNN pairs.

        Assumes ``nn_index`` of every cluster in ``affected`` is current.
        """
        clusters = self.graph.clusters
        for cid in affected:
            entry = self.pair_of.get(cid)
            if entry is None:
                continue
            handle, partner = entry
            if not (
                clusters[cid].alive
                and clusters[partner].alive
                and self.nn_id(cid) == partner
                and self.nn_id(partner) == cid
            ):
                self.queue.delete(handle)
                del self.pair_of[cid]
                del self.pair_of[partner]
        for cid in affected:
            c = clusters[cid]
            if not c.alive or c.nn_index < 0 or cid in self.pair_of:
                continue
            other, _, dist = c.adjacency[c.nn_index]
            if self.nn_id(other) == cid:
                handle = self.queue.push(pair_key(dist, cid, other), (min(cid, other), max(cid, other)))
                self.pair_of[cid] = (handle, other)
                self.pair_of[other] = (handle, cid)

    def rnn_pairs(self):
        """Set of queued pairs as ``(low id, high id)``."""
        return {item for _, item, _ in self.queue.items()}

    def step(self):
        """Merge the closest RNN pair and return its :class:`MergeEvent`."""
        (dist, _, _), (a, b) = self.queue.pop()
        del self.pair_of[a]
        del self.pair_of[b]
        graph = self.graph
        clusters = graph.clusters
        left, right = clusters[a], clusters[b]
        self.event_boundaries.append(left.adjacency[bisect_left(left.adjacency, (b,))][1])
        pid = len(clusters)
        parent = Cluster(
            pid,
            left.area + right.area,
            merge_stats(left.stats, left.area, right.stats, right.area),
            left=a,
            right=b,
        )
        merged = merge_adjacency(left, right, graph.boundaries)
        clusters.append(parent)
        for child in (left, right):
            child.parent = pid
            child.alive = False
            child.adjacency = []
            child.nn_index = -1

        boundaries = graph.boundaries
        cfg = self.cfg
        adjacency = []
        for nid, bid in merged:
            other = clusters[nid]
            d = cluster_distance(parent, other, boundaries[bid], cfg)
            adjacency.append((nid, bid, d))
            old = other.adjacency
            old_nn = old[other.nn_index]
            kept = [e for e in old if e[0] != a and e[0] != b]
            kept.append((pid, bid, d))
            other.adjacency = kept
            if old_nn[0] == a or old_nn[0] == b:
                other.nn_index = nearest_index(kept)
            elif d < old_nn[2]:
                other.nn_index = len(kept) - 1
            else:
                other.nn_index = bisect_left(kept, (old_nn[0],))
        parent.adjacency = adjacency
        parent.nn_index = nearest_index(adjacency)

        self.refresh_rnn([pid] + [nid for nid, _ in merged])
        event = MergeEvent(len(self.events), a, b, pid, dist)
        self.events.append(event)
        self.live -= 1
        return event

    def run(self, observer=None):
        while len(self.queue):
            event = self.step()
            if observer is not None:
                observer(self, event)
        roots = [c.id for c in self.graph.clusters if c.alive]
        hierarchy = Hierarchy(
            self.graph, self.events, roots[-1] if roots else None, self.event_boundaries
        )
        if len(roots) > 1:
            raise ConnectivityError(len(roots), hierarchy, roots)
        return hierarchy


ENGINES = ("compiled", "python")


def _is_fresh(graph):
    return len(graph.clusters) == graph.atom_count and all(c.alive for c in graph.clusters)


def agglomerate_compiled(graph, cfg=DEFAULT_CONFIG, audit=False):
    """Compiled counterpart of :class:`RnnAgglomerator` for a freshly founded graph.

    Produces the same hierarchy, bit for bit, and leaves ``graph`` in the same
    final state. With ``audit=True`` every merge is followed by a from-scratch
    recomputation of all distances and of the RNN set, and a mismatch with the
    queue raises AssertionError.
    """
    if not _is_fresh(graph):
        raise ValueError("the compiled engine needs a freshly founded graph")
    clusters = graph.clusters
    boundaries = graph.boundaries
    n = len(clusters)
    nb0 = len(boundaries)
    area = np.fromiter((c.area for c in clusters), dtype=np.int64, count=n)
    mean = np.array([c.stats.mean for c in clusters], dtype=np.float64).reshape(n, 3)
    sigma = np.array([c.stats.sigma for c in clusters], dtype=np.float64).reshape(n, 3)
    count = np.fromiter((len(c.adjacency) for c in clusters), dtype=np.int64, count=n)
    entries = [e for c in clusters for e in c.adjacency]
    adj_n = np.array([e[0] for e in entries], dtype=np.int64)
    adj_b = np.array([e[1] for e in entries], dtype=np.int64)
    adj_d = np.array([e[2] for e in entries], dtype=np.float64)
    blen = np.array([b.length for b in boundaries], dtype=np.float64)
    bcon = np.array([b.contrast for b in boundaries], dtype=np.float64)
    flags, eps, weights = cfg.kernel_args()

    (t, ev_left, ev_right, ev_dist, ev_bound, area, mean, sigma, alive, parent, left, right,
     blen, bcon, bpar, faults) = rnn_agglomerate(
        area, mean, sigma, adj_n, adj_b, adj_d, count, blen, bcon, flags, eps, weights, audit
    )
    if faults:
        raise AssertionError(f"queue audit failed after {faults} merge events")

    area, mean, sigma = area.tolist(), mean.tolist(), sigma.tolist()
    left, right = left.tolist(), right.tolist()
    for pid in range(n, n + t):
        clusters.append(
            Cluster(pid, area[pid], ColorStats(tuple(mean[pid]), tuple(sigma[pid])), left=left[pid], right=right[pid])
        )
    for c, par, live in zip(clusters, parent.tolist(), alive.tolist()):
        c.parent = par
        c.alive = live
        c.adjacency = []
        c.nn_index = -1
    for bid, (length, contrast) in enumerate(zip(blen[nb0:].tolist(), bcon[nb0:].tolist()), start=nb0):
        boundaries.append(Boundary(bid, length, contrast))
    for b, par in zip(boundaries, bpar.tolist()):
        b.parent = par

    events = [
        MergeEvent(k, a, b, n + k, d)
        for k, (a, b, d) in enumerate(zip(ev_left.tolist(), ev_right.tolist(), ev_dist.tolist()))
    ]
    roots = np.flatnonzero(alive).tolist()
    hierarchy = Hierarchy(graph, events, roots[-1] if roots else None, ev_bound.tolist())
    if len(roots) > 1:
        raise ConnectivityError(len(roots), hierarchy, roots)
    return hierarchy


def agglomerate(graph, cfg=DEFAULT_CONFIG, observer=None, engine=None):
    """Merge ``graph`` to a single root and return the :class:`Hierarchy`.

    ``graph`` is consumed: clusters and boundaries created by merging are
    appended to it. ``engine`` is ``"compiled"`` (the numba kernel) or
    ``"python"`` (:class:`RnnAgglomerator`); both give identical results. The
    default picks the compiled engine unless an observer is given:
    ``observer(agglomerator, event)`` is called after each merge of the
    python engine, which is how the tests audit the queue.
    """
    if engine is None:
        engine = "python" if observer is not None or not _is_fresh(graph) else "compiled"
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}; choose from {', '.join(ENGINES)}")
    if engine == "compiled":
        if observer is not None:
            raise ValueError("observers need the python engine")
        return agglomerate_compiled(graph, cfg)
    return RnnAgglomerator(graph, cfg).run(observer)
