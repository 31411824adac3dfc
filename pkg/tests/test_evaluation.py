import numpy as np
import pytest
from scipy.io import savemat

from oracles import brute_match, flood_fill, fop_table_oracle, random_image
from radig._validation import DimensionError
from radig.evaluation import (
    GroundTruth,
    PRPoint,
    bsds_to_ground_truth,
    crack_coordinates,
    fb_counts,
    fb_curve,
    find_ground_truth,
    fop_counts,
    fop_curve,
    labels_to_instances,
    match_boundaries,
    ods_ois,
    read_ground_truth,
    write_curve_csv,
    write_ground_truth,
)
from radig.io import write_label_map
from radig.pipeline import segment
from radig.ucm import crack_map_from_labels, cut, ucm


def halves(h=10, w=10):
    labels = np.zeros((h, w), dtype=int)
    labels[:, w // 2 :] = 1
    return labels


# --- F_op ------------------------------------------------------------------------------------


def test_identical_partition_scores_one():
    seg = halves()
    assert fop_counts(seg, seg) == (2.0, 2.0, 2.0, 2.0)
    curve = fop_curve(crack_map_from_labels(seg), GroundTruth([seg]), thresholds=[0.0, 0.5, 1.0])
    assert (curve[0].precision, curve[0].recall, curve[0].f) == (1.0, 1.0, 1.0)


def test_single_region_against_halves():
    one = np.zeros((10, 10), dtype=int)
    got = fop_counts(one, halves())
    assert got == fop_table_oracle(one, halves(), 0.95, 0.25)
    # each half is a part of the single region with weight 0.5; nothing is
    # a part on the prediction side
    assert got == (0.0, 1.0, 1.0, 2.0)


def test_exact_split_gives_half_weight_parts():
    truth = np.zeros((10, 10), dtype=int)
    truth[:, 8:] = 1
    seg = np.zeros((10, 10), dtype=int)
    seg[:, 4:] = 1
    seg[:, 8:] = 2
    ps, ns, pg, ng = fop_counts(seg, truth, 0.95, 0.4)
    # truth region 0 (8 columns) is split into 4 + 4 columns: two parts of weight 0.5
    assert (ps, ns) == (2.0, 3.0)
    assert (pg, ng) == (1.0, 2.0)
    assert (ps, ns, pg, ng) == fop_table_oracle(seg, truth, 0.95, 0.4)


@pytest.mark.parametrize("seed", range(20))
def test_fop_counts_match_overlap_table(seed):
    rng = np.random.default_rng(seed)
    seg = flood_fill(np.kron(rng.integers(0, 4, size=(4, 4)), np.ones((3, 3), int)))
    truth = flood_fill(np.kron(rng.integers(0, 3, size=(3, 3)), np.ones((4, 4), int)))
    for go, gp in ((0.95, 0.25), (0.75, 0.1), (0.5, 0.5), (1.0, 0.0)):
        got = fop_counts(seg, truth, go, gp)
        assert got == pytest.approx(fop_table_oracle(seg, truth, go, gp), abs=1e-12)


@pytest.mark.parametrize("gammas", [(0.95, 0.25), (1.0, 1.0), (0.3, 0.0)])
def test_self_match_any_gamma(gammas):
    img = random_image(np.random.default_rng(5), 16, 16)
    seg = segment(img).atoms
    ps, ns, pg, ng = fop_counts(seg, seg, *gammas)
    assert ps == ns and pg == ng


def test_fop_curve_from_hierarchy_matches_crack_source():
    img = random_image(np.random.default_rng(2), 16, 16)
    r = segment(img)
    gt = GroundTruth([cut(r.hierarchy, r.levels, 0.6), cut(r.hierarchy, r.levels, 0.9)])
    a = fop_curve((r.hierarchy, r.levels), gt)
    b = fop_curve(ucm(r.hierarchy, r.levels), gt, thresholds=[p.threshold for p in a])
    assert a == b
    counts = [p.predicted for p in a]
    assert all(x >= y for x, y in zip(counts, counts[1:]))  # monotone region count
    for p in a:
        assert 0 <= p.precision <= 1 and 0 <= p.recall <= 1
        assert p.f == pytest.approx(0 if p.precision + p.recall == 0 else 2 * p.precision * p.recall / (p.precision + p.recall))
    assert max(p.f for p in a) < 1.0
    assert any(p.recall == pytest.approx(1.0) for p in fop_curve((r.hierarchy, r.levels), gt.partitions[0]))


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        fop_curve(crack_map_from_labels(halves(10, 10)), halves(10, 12))
    with pytest.raises(DimensionError):
        fb_curve(crack_map_from_labels(halves(10, 10)), halves(12, 10))


def test_ground_truth_validation():
    with pytest.raises(ValueError):
        GroundTruth([])
    with pytest.raises(DimensionError):
        GroundTruth([halves(10, 10), halves(10, 12)])


# --- F_b -------------------------------------------------------------------------------------


def test_boundary_equal_to_truth():
    gt = halves(20, 20)
    cracks = crack_map_from_labels(gt, 0.6)
    curve = fb_curve(cracks, gt, thresholds=[0.0, 0.3, 0.59, 1.0])
    for p in curve[:3]:
        assert (p.precision, p.recall, p.f) == (1.0, 1.0, 1.0)
    assert (curve[3].precision, curve[3].recall, curve[3].f) == (0.0, 0.0, 0.0)


def test_one_pixel_shift_inside_and_outside_tolerance():
    gt = halves(20, 20)
    shifted = np.zeros_like(gt)
    shifted[:, 11:] = 1
    cracks = crack_map_from_labels(shifted)
    inside = fb_curve(cracks, gt, thresholds=[0.0], tol_frac=0.05)[0]
    outside = fb_curve(cracks, gt, thresholds=[0.0], tol_frac=0.01)[0]
    assert inside.f == 1.0
    assert outside.f == 0.0


@pytest.mark.parametrize("seed", range(10))
def test_matcher_against_brute_force(seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 30, size=(rng.integers(0, 40), 2))
    b = rng.integers(0, 30, size=(rng.integers(0, 40), 2))
    for max_dist in (0.0, 1.5, 3.0, 7.0):
        got = match_boundaries(a, b, max_dist)
        ref = brute_match(a, b, max_dist)
        np.testing.assert_array_equal(got[0], ref[0])
        np.testing.assert_array_equal(got[1], ref[1])


@pytest.mark.parametrize("seed", range(4))
def test_swapping_prediction_and_truth_swaps_p_and_r(seed):
    rng = np.random.default_rng(seed)
    a = flood_fill(np.kron(rng.integers(0, 3, size=(6, 6)), np.ones((3, 3), int)))
    b = flood_fill(np.kron(rng.integers(0, 3, size=(9, 9)), np.ones((2, 2), int)))
    ab = fb_curve(crack_map_from_labels(a), b, thresholds=[0.0], tol_frac=0.03)[0]
    ba = fb_curve(crack_map_from_labels(b), a, thresholds=[0.0], tol_frac=0.03)[0]
    assert (ab.precision, ab.recall) == (ba.recall, ba.precision)


def test_fb_precision_uses_union_of_annotators():
    gt = GroundTruth([halves(10, 10), halves(10, 10).T])
    pred = crack_map_from_labels(halves(10, 10))
    hits, predicted, recall_hits, truth = fb_counts(pred.vertical > 0, pred.horizontal > 0, gt, 0.0)
    assert hits == predicted == 10.0
    assert (recall_hits, truth) == (10.0, 20.0)


def test_crack_coordinates():
    v = np.zeros((2, 2), dtype=bool)
    v[1, 0] = True
    hz = np.zeros((1, 3), dtype=bool)
    hz[0, 2] = True
    np.testing.assert_array_equal(crack_coordinates(v, hz), [[3, 2], [2, 5]])


# --- ODS / OIS -------------------------------------------------------------------------------


def point(t, ph, pn, rh, rn):
    return PRPoint.from_counts(t, ph, pn, rh, rn)


def test_ods_ois_single_image():
    curve = [point(0.0, 5, 10, 5, 5), point(0.5, 4, 5, 4, 5), point(1.0, 0, 0, 0, 5)]
    ods, ois = ods_ois([curve])
    assert ois == max(p.f for p in curve)
    assert ods.f <= ois and ods.threshold == 0.5


def test_ods_ois_two_images_hand_computed():
    c1 = [point(0.0, 9, 10, 9, 10), point(1.0, 1, 2, 1, 10)]
    c2 = [point(0.0, 2, 10, 2, 10), point(1.0, 8, 8, 8, 10)]
    ods, ois = ods_ois([c1, c2])
    # pooled at t=0: P = 11/20, R = 11/20 -> F = 0.55
    # pooled at t=1: P = 9/10, R = 9/20 -> F = 0.6
    assert ods.threshold == 1.0
    assert ods.precision == pytest.approx(0.9) and ods.recall == pytest.approx(0.45)
    assert ods.f == pytest.approx(2 * 0.9 * 0.45 / 1.35)
    # per image best: 0.9 and 2*1*0.8/1.8
    assert ois == pytest.approx((0.9 + 16 / 18) / 2)
    assert ois > ods.f


def test_ods_equals_ois_for_identical_curves():
    c = [point(0.0, 3, 6, 3, 4), point(0.5, 3, 4, 2, 4)]
    ods, ois = ods_ois([c, list(c), list(c)])
    assert ods.f == pytest.approx(ois)


def test_ods_ois_errors():
    with pytest.raises(ValueError):
        ods_ois([])
    with pytest.raises(ValueError):
        ods_ois([[point(0.0, 1, 1, 1, 1)], [point(0.5, 1, 1, 1, 1)]])


def test_f_zero_convention():
    p = point(0.3, 0, 0, 0, 7)
    assert (p.precision, p.recall, p.f) == (0.0, 0.0, 0.0)


# --- instances -------------------------------------------------------------------------------


def test_single_category_single_instance():
    np.testing.assert_array_equal(labels_to_instances(np.full((5, 6), 3)), 0)


def test_disconnected_blobs_split():
    cat = np.zeros((6, 6), dtype=int)
    cat[1:3, 1:3] = 4
    cat[4:6, 3:6] = 4
    inst = labels_to_instances(cat)
    assert len(np.unique(inst)) == 3
    assert inst[1, 1] != inst[4, 4]


def test_checkerboard_cells():
    cat = np.kron(np.indices((4, 5)).sum(axis=0) % 2, np.ones((2, 3), int))
    inst = labels_to_instances(cat)
    assert len(np.unique(inst)) == 20
    np.testing.assert_array_equal(inst, flood_fill(cat))


# --- self-consistency ------------------------------------------------------------------------


def test_ground_truth_against_itself():
    rng = np.random.default_rng(3)
    parts = [flood_fill(np.kron(rng.integers(0, 3, size=(5, 5)), np.ones((4, 4), int))) for _ in range(2)]
    gt = GroundTruth(parts)
    curves_op, curves_b = [], []
    for part in parts:
        cracks = crack_map_from_labels(part)
        single = GroundTruth([part])
        curves_op.append(fop_curve(cracks, single, np.linspace(0, 1, 64)))
        curves_b.append(fb_curve(cracks, single, np.linspace(0, 1, 64)))
    assert ods_ois(curves_op)[0].f == 1.0
    assert ods_ois(curves_b)[0].f == 1.0
    assert gt.shape == (20, 20)


# --- files -----------------------------------------------------------------------------------


def test_ground_truth_files(tmp_path):
    a, b = halves(), halves().T
    write_ground_truth(tmp_path / "x.npz", GroundTruth([a, b]))
    write_label_map(tmp_path / "y.png", a)
    (tmp_path / "z").mkdir()
    write_label_map(tmp_path / "z" / "0.png", a)
    write_label_map(tmp_path / "z" / "1.png", b)
    for stem, n in (("x", 2), ("y", 1), ("z", 2)):
        path = find_ground_truth(tmp_path, stem)
        gt = read_ground_truth(path)
        assert len(gt.partitions) == n
        np.testing.assert_array_equal(gt.partitions[0], a)
    assert find_ground_truth(tmp_path, "missing") is None


def test_bsds_conversion(tmp_path):
    seg1 = (halves() + 1).astype(np.uint16)
    seg2 = np.ones((10, 10), dtype=np.uint16)
    cell = np.empty((1, 2), dtype=object)
    for i, seg in enumerate((seg1, seg2)):
        rec = np.empty((1, 1), dtype=[("Segmentation", object), ("Boundaries", object)])
        rec[0, 0] = (seg, np.zeros_like(seg, dtype=bool))
        cell[0, i] = rec
    savemat(tmp_path / "g.mat", {"groundTruth": cell})
    gt = bsds_to_ground_truth(tmp_path / "g.mat")
    assert len(gt.partitions) == 2
    np.testing.assert_array_equal(gt.partitions[0], halves())
    np.testing.assert_array_equal(gt.partitions[1], 0)


def test_curve_csv(tmp_path):
    write_curve_csv(tmp_path / "c.csv", [point(0.25, 1, 2, 1, 1)])
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "threshold,precision,recall,F"
    assert [float(v) for v in lines[1].split(",")] == pytest.approx([0.25, 0.5, 1.0, 2 / 3])
