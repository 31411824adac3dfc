"""Ultrametric levels, threshold cuts, crack maps and the JSON tree document.

Greedy merge distances are not monotone, so they are first replaced by their
running maximum over merge time. Every threshold then selects a prefix of the
merge sequence, which makes cuts nested and the crack map an ultrametric.
"""

import json
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .agglomerate import Hierarchy, MergeEvent
from .graph import RegionGraph
from .structures import NOT_CONNECTED, Cluster, ColorStats

# smallest rescaled level; keeps the weakest merge visible in an 8-bit render
LEVEL_FLOOR = 1.0 / 256.0

FORMAT_NAME = "radig-hierarchy"
FORMAT_VERSION = 1


@dataclass
class UcmLevels:
    """Per-event merge levels: ``raw`` running-max distances, ``level`` in (0, 1]."""

    raw: np.ndarray
    level: np.ndarray

    def __len__(self):
        return len(self.level)

    def thresholds(self):
        """Distinct levels, ascending."""
        return np.unique(self.level)


@dataclass
class CrackMap:
    """Merge level on every crack between 4-adjacent pixels.

    ``vertical[y, x]`` separates pixels (y, x) and (y, x + 1);
    ``horizontal[y, x]`` separates (y, x) and (y + 1, x).
    """

    vertical: np.ndarray
    horizontal: np.ndarray

    @property
    def shape(self):
        return (self.vertical.shape[0], self.horizontal.shape[1])

    def threshold(self, t):
        return CrackMap(self.vertical > t, self.horizontal > t)


def monotonize(events):
    """Running maximum of event distances, min-max rescaled into (0, 1].

    The smallest level maps to ``LEVEL_FLOOR`` and the largest to 1; a single
    distinct value maps to 1.
    """
    dist = np.array([e.distance for e in events], dtype=np.float64)
    if dist.size == 0:
        return UcmLevels(dist, dist.copy())
    raw = np.maximum.accumulate(dist)
    lo, hi = raw[0], raw[-1]
    if hi > lo:
        level = LEVEL_FLOOR + (1.0 - LEVEL_FLOOR) * (raw - lo) / (hi - lo)
        level[-1] = 1.0
    else:
        level = np.ones_like(raw)
    return UcmLevels(raw, level)


def _compact_raster(labels):
    """Relabel to 0..R-1 in raster order of first occurrence."""
    uniq, first, inverse = np.unique(labels.ravel(), return_index=True, return_inverse=True)
    rank = np.empty(len(uniq), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(uniq))
    return rank[inverse].reshape(labels.shape)


def merged_count(levels, t):
    """Number of leading events whose level is <= t."""
    return int(np.searchsorted(levels.level, t, side="right"))


def cut(h, levels, t):
    """Label map at threshold ``t``: every atom replaced by its highest ancestor
    created at level <= t, compacted to 0..R-1 in raster order."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {t}")
    k = merged_count(levels, t)
    n = h.atom_count
    up = np.arange(n + len(h.events), dtype=np.int64)
    for e in h.events[:k]:
        up[e.left] = e.parent
        up[e.right] = e.parent
    while True:
        nxt = up[up]
        if np.array_equal(nxt, up):
            break
        up = nxt
    return _compact_raster(up[h.labels])


def boundary_levels(h, levels):
    """Merge level of every boundary, following concatenation parents upwards."""
    boundaries = h.graph.boundaries
    level = np.zeros(len(boundaries))
    consumed = np.full(len(boundaries), -1, dtype=np.int64)
    for t, bid in enumerate(h.event_boundaries):
        consumed[bid] = t
    # parents are created after their children, so a reverse sweep suffices
    for bid in range(len(boundaries) - 1, -1, -1):
        if consumed[bid] >= 0:
            level[bid] = levels.level[consumed[bid]]
        elif boundaries[bid].parent != NOT_CONNECTED:
            level[bid] = level[boundaries[bid].parent]
    return level


def ucm(h, levels):
    """Crack map whose value on each crack is the level at which the regions on
    either side first merge (0 inside an atom)."""
    labels = h.labels
    H, W = labels.shape
    vertical = np.zeros((H, W - 1))
    horizontal = np.zeros((H - 1, W))
    if not h.events:
        return CrackMap(vertical, horizontal)
    blevel = boundary_levels(h, levels)
    n = h.atom_count
    pairs = h.graph.atom_pairs
    keys = pairs[:, 1].astype(np.int64) * n + pairs[:, 0]
    for out, a, b in (
        (vertical, labels[:, :-1], labels[:, 1:]),
        (horizontal, labels[:-1, :], labels[1:, :]),
    ):
        mask = a != b
        ka = np.maximum(a[mask], b[mask]).astype(np.int64) * n + np.minimum(a[mask], b[mask])
        out[mask] = blevel[np.searchsorted(keys, ka)]
    return CrackMap(vertical, horizontal)


def crack_map_from_labels(labels, value=1.0):
    """Crack map of a flat partition: ``value`` wherever the labels differ."""
    labels = np.asarray(labels)
    return CrackMap(
        np.where(labels[:, :-1] != labels[:, 1:], value, 0.0),
        np.where(labels[:-1, :] != labels[1:, :], value, 0.0),
    )


def crack_components(cracks, t):
    """Partition obtained by joining pixels across every crack with value <= t."""
    H, W = cracks.shape
    n = H * W
    idx = np.arange(n).reshape(H, W)
    vmask = cracks.vertical <= t
    hmask = cracks.horizontal <= t
    rows = np.concatenate([idx[:, :-1][vmask], idx[:-1, :][hmask]])
    cols = np.concatenate([idx[:, 1:][vmask], idx[1:, :][hmask]])
    graph = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    _, comp = connected_components(graph, directed=False)
    return _compact_raster(comp.reshape(H, W))


def render_ucm(cracks):
    """Float raster of shape (2H+1, 2W+1): pixels at odd/odd, cracks between,
    junctions take the maximum of their incident cracks."""
    H, W = cracks.shape
    out = np.zeros((2 * H + 1, 2 * W + 1))
    out[1:-1:2, 2:-2:2] = cracks.vertical
    out[2:-2:2, 1:-1:2] = cracks.horizontal
    padded = np.pad(out, 1)
    junction = np.maximum.reduce(
        [
            padded[:-2, 1:-1],
            padded[2:, 1:-1],
            padded[1:-1, :-2],
            padded[1:-1, 2:],
        ]
    )
    out[0::2, 0::2] = junction[0::2, 0::2]
    return out


def crack_map_from_raster(raster):
    """Inverse of :func:`render_ucm` for the crack positions."""
    raster = np.asarray(raster, dtype=np.float64)
    if raster.ndim != 2 or raster.shape[0] % 2 == 0 or raster.shape[1] % 2 == 0:
        raise ValueError(f"UCM raster must have odd dimensions (2H+1, 2W+1), got {raster.shape}")
    return CrackMap(raster[1:-1:2, 2:-2:2].copy(), raster[2:-2:2, 1:-1:2].copy())


def quantize(raster, bits=16):
    top = (1 << bits) - 1
    dtype = np.uint8 if bits == 8 else np.uint16
    return np.rint(np.clip(raster, 0.0, 1.0) * top).astype(dtype)


# --- tree document -------------------------------------------------------------


class TreeFormatError(ValueError):
    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(field)
        prefix = ": ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.line = line
        self.field = field


def _cluster_record(c):
    children = [] if c.left == NOT_CONNECTED else [c.left, c.right]
    return {
        "id": c.id,
        "parent": c.parent,
        "children": children,
        "area": c.area,
        "mean": list(c.stats.mean),
        "sigma": list(c.stats.sigma),
    }


def serialize(h, levels):
    """Deterministic JSON text for a hierarchy; one cluster or event per line."""
    H, W = h.shape
    head = [
        f'"format": {json.dumps(FORMAT_NAME)}',
        f'"version": {FORMAT_VERSION}',
        f'"width": {W}',
        f'"height": {H}',
        f'"atom_count": {h.atom_count}',
        f'"root": {json.dumps(h.root)}',
    ]
    clusters = [json.dumps(_cluster_record(c), separators=(",", ":")) for c in h.clusters]
    events = [
        json.dumps(
            {
                "time": e.time,
                "left": e.left,
                "right": e.right,
                "parent": e.parent,
                "distance": float(e.distance),
                "level": float(levels.level[e.time]),
            },
            separators=(",", ":"),
        )
        for e in h.events
    ]
    lines = ["{"]
    lines += [item + "," for item in head]
    lines.append('"clusters": [')
    lines += [rec + ("," if i < len(clusters) - 1 else "") for i, rec in enumerate(clusters)]
    lines.append("],")
    lines.append('"events": [')
    lines += [rec + ("," if i < len(events) - 1 else "") for i, rec in enumerate(events)]
    lines.append("]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _record_lines(text, key):
    """1-based line number of the first record of the ``key`` array."""
    marker = f'"{key}": ['
    for number, line in enumerate(text.splitlines(), start=1):
        if line.startswith(marker):
            return number + 1
    return None


def _expect(record, name, kind, line, where):
    if name not in record:
        raise TreeFormatError("missing field", line, f"{where}.{name}")
    value = record[name]
    ok = {
        "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
        "num": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
        "list": lambda v: isinstance(v, list),
    }[kind](value)
    if not ok:
        raise TreeFormatError(f"expected {kind}, got {type(value).__name__}", line, f"{where}.{name}")
    return value


def parse(text):
    """Parse a tree document back into ``(Hierarchy, UcmLevels)``.

    The returned hierarchy has no label map or boundaries; it supports
    re-serialisation and tree queries.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TreeFormatError(exc.msg, exc.lineno) from None
    if not isinstance(doc, dict):
        raise TreeFormatError("top level must be an object", 1)
    if doc.get("format") != FORMAT_NAME:
        raise TreeFormatError(f"not a {FORMAT_NAME} document", None, "format")
    for name in ("width", "height", "atom_count"):
        _expect(doc, name, "int", None, "document")
    first_cluster = _record_lines(text, "clusters")
    first_event = _record_lines(text, "events")

    clusters = []
    for i, rec in enumerate(_expect(doc, "clusters", "list", None, "document")):
        line = None if first_cluster is None else first_cluster + i
        where = f"clusters[{i}]"
        if not isinstance(rec, dict):
            raise TreeFormatError("expected object", line, where)
        cid = _expect(rec, "id", "int", line, where)
        if cid != i:
            raise TreeFormatError(f"id {cid} out of order", line, f"{where}.id")
        children = _expect(rec, "children", "list", line, where)
        if len(children) not in (0, 2):
            raise TreeFormatError("need zero or two children", line, f"{where}.children")
        mean = _expect(rec, "mean", "list", line, where)
        sigma = _expect(rec, "sigma", "list", line, where)
        if len(mean) != 3 or len(sigma) != 3:
            raise TreeFormatError("mean and sigma need three channels", line, where)
        c = Cluster(
            cid,
            _expect(rec, "area", "int", line, where),
            ColorStats(tuple(float(v) for v in mean), tuple(float(v) for v in sigma)),
            *(children or [NOT_CONNECTED, NOT_CONNECTED]),
        )
        c.parent = _expect(rec, "parent", "int", line, where)
        c.alive = c.parent == NOT_CONNECTED
        clusters.append(c)

    events = []
    level = []
    for i, rec in enumerate(_expect(doc, "events", "list", None, "document")):
        line = None if first_event is None else first_event + i
        where = f"events[{i}]"
        if not isinstance(rec, dict):
            raise TreeFormatError("expected object", line, where)
        fields = [_expect(rec, k, "int", line, where) for k in ("time", "left", "right", "parent")]
        events.append(MergeEvent(*fields, float(_expect(rec, "distance", "num", line, where))))
        level.append(float(_expect(rec, "level", "num", line, where)))

    graph = RegionGraph(None, clusters, [], np.zeros((0, 2), dtype=np.int64), shape=(doc["height"], doc["width"]))
    graph.atom_count = doc["atom_count"]
    h = Hierarchy(graph, events, doc.get("root"))
    raw = np.maximum.accumulate([e.distance for e in events]) if events else np.zeros(0)
    return h, UcmLevels(np.asarray(raw, dtype=np.float64), np.asarray(level, dtype=np.float64))
