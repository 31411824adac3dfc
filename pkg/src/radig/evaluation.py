"""Scoring hierarchies against human ground truth.

Two precision/recall families are computed along a threshold sweep:

* object-and-parts (F_op) on regions. With overlap ``n = |s & g|`` between a
  predicted region ``s`` and a ground-truth region ``g``:

  - object match: ``n/|s| >= gamma_object`` and ``n/|g| >= gamma_object``,
    credit 1 to both regions;
  - ``s`` is a part of ``g``: ``n/|s| >= gamma_object`` and
    ``n/|g| >= gamma_part``, credit ``n/|g|`` to ``s``;
  - ``g`` is a part of ``s``: the mirror image, credit ``n/|s|`` to ``g``.

  Each region keeps its best credit. Precision is the summed credit of the
  predicted regions over their count, recall the same for ground truth.

* boundaries (F_b) on cracks, matched one-to-one within a distance tolerance.

Several annotators are pooled by summing numerators and denominators.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit
from scipy.spatial import cKDTree

from ._validation import DimensionError
from .ucm import CrackMap, crack_components, crack_map_from_labels, cut

GAMMA_OBJECT = 0.95
GAMMA_PART = 0.25
FB_TOLERANCE = 0.0075


@dataclass
class GroundTruth:
    """One or more annotator partitions of the same image."""

    partitions: list

    def __post_init__(self):
        if not self.partitions:
            raise ValueError("ground truth needs at least one annotator")
        self.partitions = [np.asarray(p) for p in self.partitions]
        shape = self.partitions[0].shape
        for p in self.partitions:
            if p.shape != shape:
                raise DimensionError(f"annotator partitions differ in shape: {p.shape} vs {shape}")

    @property
    def shape(self):
        return self.partitions[0].shape


@dataclass
class PRPoint:
    threshold: float
    precision: float
    recall: float
    f: float
    # pooled counts, kept for dataset-level aggregation
    precision_hits: float = 0.0
    predicted: float = 0.0
    recall_hits: float = 0.0
    truth: float = 0.0

    @classmethod
    def from_counts(cls, threshold, precision_hits, predicted, recall_hits, truth):
        precision_hits, predicted = float(precision_hits), float(predicted)
        recall_hits, truth = float(recall_hits), float(truth)
        p = precision_hits / predicted if predicted > 0 else 0.0
        r = recall_hits / truth if truth > 0 else 0.0
        return cls(float(threshold), p, r, f_measure(p, r), precision_hits, predicted, recall_hits, truth)


def f_measure(p, r):
    return 2.0 * p * r / (p + r) if p + r > 0 else 0.0


def _as_ground_truth(gt):
    if isinstance(gt, GroundTruth):
        return gt
    arr = np.asarray(gt)
    if arr.ndim == 2:
        return GroundTruth([arr])
    return GroundTruth(list(gt))


def _dense_ids(labels):
    _, inverse = np.unique(labels.ravel(), return_inverse=True)
    return inverse


def fop_counts(segmentation, truth, gamma_object=GAMMA_OBJECT, gamma_part=GAMMA_PART):
    """Return ``(precision credit, #predicted, recall credit, #truth)`` for one annotator."""
    s = _dense_ids(np.asarray(segmentation))
    g = _dense_ids(np.asarray(truth))
    ns = int(s.max()) + 1
    ng = int(g.max()) + 1
    size_s = np.bincount(s, minlength=ns).astype(np.float64)
    size_g = np.bincount(g, minlength=ng).astype(np.float64)
    pair, overlap = np.unique(s.astype(np.int64) * ng + g, return_counts=True)
    ps = pair // ng
    pg = pair % ng
    rs = overlap / size_s[ps]
    rg = overlap / size_g[pg]

    obj = (rs >= gamma_object) & (rg >= gamma_object)
    s_part = ~obj & (rs >= gamma_object) & (rg >= gamma_part)
    g_part = ~obj & (rg >= gamma_object) & (rs >= gamma_part)
    credit_s = np.zeros(ns)
    credit_g = np.zeros(ng)
    np.maximum.at(credit_s, ps, np.where(obj, 1.0, np.where(s_part, rg, 0.0)))
    np.maximum.at(credit_g, pg, np.where(obj, 1.0, np.where(g_part, rs, 0.0)))
    return credit_s.sum(), float(ns), credit_g.sum(), float(ng)


def _segmentations(source, thresholds):
    if isinstance(source, CrackMap):
        for t in thresholds:
            yield t, crack_components(source, t)
    else:
        h, levels = source
        for t in thresholds:
            yield t, cut(h, levels, t)


def default_thresholds(source):
    """0 plus every distinct level of the source (hierarchy levels or crack values)."""
    if isinstance(source, CrackMap):
        values = np.concatenate([source.vertical.ravel(), source.horizontal.ravel()])
    else:
        values = np.asarray(source[1].level)
    return np.unique(np.concatenate([[0.0], values]))


def _shape_of(source):
    return source.shape if isinstance(source, CrackMap) else tuple(source[0].shape)


def fop_curve(source, gt, thresholds=None, gamma_object=GAMMA_OBJECT, gamma_part=GAMMA_PART):
    """Object-and-parts precision/recall along a threshold sweep.

    ``source`` is either ``(hierarchy, levels)`` or a :class:`CrackMap`.
    """
    gt = _as_ground_truth(gt)
    if tuple(_shape_of(source)) != tuple(gt.shape):
        raise DimensionError(f"prediction {_shape_of(source)} and ground truth {gt.shape} differ")
    if thresholds is None:
        thresholds = default_thresholds(source)
    curve = []
    for t, seg in _segmentations(source, thresholds):
        totals = np.zeros(4)
        for part in gt.partitions:
            totals += fop_counts(seg, part, gamma_object, gamma_part)
        curve.append(PRPoint.from_counts(float(t), *totals))
    return curve


def crack_coordinates(vertical, horizontal):
    """Integer coordinates of the marked cracks on the doubled grid."""
    vy, vx = np.nonzero(vertical)
    hy, hx = np.nonzero(horizontal)
    return np.concatenate(
        [np.stack([2 * vy + 1, 2 * vx + 2], axis=1), np.stack([2 * hy + 2, 2 * hx + 1], axis=1)]
    ).astype(np.int64)


@njit(cache=True)
def _greedy_accept(ia, ib, na, nb):
    used_a = np.zeros(na, dtype=np.bool_)
    used_b = np.zeros(nb, dtype=np.bool_)
    for k in range(len(ia)):
        a = ia[k]
        b = ib[k]
        if not used_a[a] and not used_b[b]:
            used_a[a] = True
            used_b[b] = True
    return used_a, used_b


def match_boundaries(pred_xy, truth_xy, max_dist):
    """One-to-one greedy nearest matching of two crack sets.

    Candidate pairs within ``max_dist`` (doubled-grid units) are accepted in
    order of distance, ties broken by the lexicographically sorted pair of
    coordinates, which makes the result independent of argument order for
    sets without duplicate points; remaining ties go by index.
    Returns boolean ``matched`` masks for both sets.
    """
    na, nb = len(pred_xy), len(truth_xy)
    if na == 0 or nb == 0:
        return np.zeros(na, dtype=bool), np.zeros(nb, dtype=bool)
    pairs = cKDTree(pred_xy).sparse_distance_matrix(
        cKDTree(truth_xy), max_dist, output_type="ndarray"
    )
    ia = pairs["i"].astype(np.int64)
    ib = pairs["j"].astype(np.int64)
    d2 = ((pred_xy[ia] - truth_xy[ib]) ** 2).sum(axis=1)
    pa, pb = pred_xy[ia], truth_xy[ib]
    a_first = (pa[:, 0] < pb[:, 0]) | ((pa[:, 0] == pb[:, 0]) & (pa[:, 1] <= pb[:, 1]))
    lo = np.where(a_first[:, None], pa, pb)
    hi = np.where(a_first[:, None], pb, pa)
    order = np.lexsort((ib, ia, hi[:, 1], hi[:, 0], lo[:, 1], lo[:, 0], d2))
    return _greedy_accept(ia[order], ib[order], na, nb)


def fb_counts(pred_vertical, pred_horizontal, gt, tol_frac=FB_TOLERANCE):
    """Pooled boundary counts for one binarised prediction."""
    gt = _as_ground_truth(gt)
    H, W = gt.shape
    max_dist = 2.0 * tol_frac * np.hypot(H, W)
    pred = crack_coordinates(pred_vertical, pred_horizontal)
    hit_pred = np.zeros(len(pred), dtype=bool)
    recall_hits = 0.0
    truth = 0.0
    for part in gt.partitions:
        gcm = crack_map_from_labels(part)
        gxy = crack_coordinates(gcm.vertical > 0, gcm.horizontal > 0)
        mp, mg = match_boundaries(pred, gxy, max_dist)
        hit_pred |= mp
        recall_hits += mg.sum()
        truth += len(gxy)
    return float(hit_pred.sum()), float(len(pred)), float(recall_hits), float(truth)


def fb_curve(cracks, gt, thresholds=None, tol_frac=FB_TOLERANCE):
    """Boundary precision/recall of ``cracks > t`` along the threshold sweep."""
    gt = _as_ground_truth(gt)
    if tuple(cracks.shape) != tuple(gt.shape):
        raise DimensionError(f"prediction {cracks.shape} and ground truth {gt.shape} differ")
    if thresholds is None:
        thresholds = default_thresholds(cracks)
    return [
        PRPoint.from_counts(float(t), *fb_counts(cracks.vertical > t, cracks.horizontal > t, gt, tol_frac))
        for t in thresholds
    ]


def ods_ois(curves):
    """Optimal dataset scale and optimal image scale from per-image curves.

    ODS pools the counts of all images at each shared threshold and takes the
    best resulting F. OIS is the mean over images of each image's best F.
    """
    curves = [list(c) for c in curves]
    if not curves:
        raise ValueError("need at least one curve")
    npts = len(curves[0])
    if any(len(c) != npts for c in curves):
        raise ValueError("curves must share the same thresholds")
    best = None
    for i in range(npts):
        t = curves[0][i].threshold
        sums = np.zeros(4)
        for c in curves:
            if c[i].threshold != t:
                raise ValueError("curves must share the same thresholds")
            sums += (c[i].precision_hits, c[i].predicted, c[i].recall_hits, c[i].truth)
        point = PRPoint.from_counts(t, *sums)
        if best is None or point.f > best.f:
            best = point
    ois = float(np.mean([max(p.f for p in c) for c in curves]))
    return best, ois


def labels_to_instances(category_map):
    """Split every category into its 4-connected components, numbered in raster order."""
    category_map = np.asarray(category_map)
    return crack_components(crack_map_from_labels(category_map), 0.5)


# --- ground-truth files ------------------------------------------------------------


def read_ground_truth(path):
    """Load ``<stem>.png`` (one annotator), ``<stem>.npz`` (one array per
    annotator, in key order) or a directory of PNGs (one per annotator)."""
    from .io import read_label_map

    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.png"))
        if not files:
            raise FileNotFoundError(f"no PNG annotations in {path}")
        return GroundTruth([read_label_map(f) for f in files])
    if path.suffix == ".npz":
        with np.load(path) as data:
            return GroundTruth([data[k] for k in sorted(data.files)])
    return GroundTruth([read_label_map(path)])


def find_ground_truth(gt_dir, stem):
    gt_dir = Path(gt_dir)
    for candidate in (gt_dir / f"{stem}.npz", gt_dir / f"{stem}.png", gt_dir / stem):
        if candidate.exists():
            return candidate
    return None


def write_ground_truth(path, gt):
    gt = _as_ground_truth(gt)
    np.savez_compressed(path, **{f"annotator_{k:03d}": p for k, p in enumerate(gt.partitions)})


def bsds_to_ground_truth(mat_path):
    """Read a BSDS500 ``groundTruth`` .mat file into a :class:`GroundTruth`."""
    from scipy.io import loadmat

    mat = loadmat(mat_path)
    entries = mat["groundTruth"][0]
    parts = []
    for entry in entries:
        seg = np.asarray(entry["Segmentation"][0][0])
        parts.append(np.unique(seg, return_inverse=True)[1].reshape(seg.shape))
    return GroundTruth(parts)


def write_curve_csv(path, curve):
    lines = ["threshold,precision,recall,F"]
    lines += [f"{p.threshold!r},{p.precision!r},{p.recall!r},{p.f!r}" for p in curve]
    Path(path).write_text("\n".join(lines) + "\n")
