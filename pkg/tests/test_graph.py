import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import atom_state, pair_counts, random_image
from radig._validation import DimensionError
from radig.color import gradient_magnitude, srgb_to_lab
from radig.distance import DEFAULT_CONFIG, cluster_distance, init_contrast
from radig.graph import (
    MIN_BOUNDARY_LENGTH,
    cluster_perimeters,
    diagonal_shorten_check,
    fit_stats,
    found_graph,
    merge_stats,
)
from radig.structures import NOT_CONNECTED, ColorStats
from radig.watershed import watershed

L1 = DEFAULT_CONFIG.ablate("l1-boundary")


def flat_lab(labels, scale=10.0):
    lab = np.zeros(labels.shape + (3,))
    lab[..., 0] = labels * scale
    return lab


def staircase_fixture():
    """A 3x3 square (label 1) and a five-pixel plus (label 2) on a background."""
    labels = np.zeros((9, 9), dtype=int)
    labels[1:4, 1:4] = 1
    labels[5, 4:7] = 2
    labels[4:7, 5] = 2
    return labels


def test_two_halves():
    labels = np.zeros((10, 10), dtype=int)
    labels[:, 5:] = 1
    g = found_graph(labels, flat_lab(labels))
    assert [c.area for c in g.clusters] == [50, 50]
    assert len(g.boundaries) == 1
    assert g.boundaries[0].length == 10.0
    assert [len(c.adjacency) for c in g.clusters] == [1, 1]
    g.check_invariants()


def test_single_region():
    rng = np.random.default_rng(0)
    lab = rng.normal(size=(6, 7, 3)) * 10
    g = found_graph(np.zeros((6, 7), dtype=int), lab)
    (c,) = g.clusters
    assert c.area == 42 and c.adjacency == [] and c.nn_index == -1
    assert c.left == c.right == c.parent == NOT_CONNECTED
    ref = fit_stats(lab)
    np.testing.assert_allclose(c.stats.mean, ref.mean, rtol=1e-12)
    np.testing.assert_allclose(c.stats.sigma, ref.sigma, rtol=1e-12)


def test_staircase_lengths():
    g = found_graph(staircase_fixture(), flat_lab(staircase_fixture()))
    per = cluster_perimeters(g)
    assert per[1] == pytest.approx(10.82, abs=0.02)
    assert per[2] == pytest.approx(8.49, abs=0.02)


def test_staircase_without_shortening_is_l1():
    labels = staircase_fixture()
    per = cluster_perimeters(found_graph(labels, flat_lab(labels), L1))
    assert per[1] == 12.0 and per[2] == 12.0


@pytest.mark.parametrize(
    "window, expected",
    [
        (("A", "B", "B", "A"), True),  # i matches l
        (("A", "B", "B", "C"), True),  # j matches k
        (("A", "B", "C", "D"), False),
        (("A", "B", None, "A"), False),  # clipped by the border
        # k below i and l below j: a straight boundary, not a diagonal
        (("A", "B", "A", "B"), False),
    ],
)
def test_diagonal_check(window, expected):
    assert diagonal_shorten_check(*window) is expected


def test_merge_identical_singletons():
    s = ColorStats((3.0, -1.0, 2.0), (0.0, 0.0, 0.0))
    m = merge_stats(s, 1, s, 1)
    assert m.mean == s.mean and m.sigma == (0.0, 0.0, 0.0)


def test_merge_two_point_std():
    m = merge_stats(ColorStats((0.0, 0.0, 0.0), (0.0,) * 3), 1, ColorStats((10.0, 0.0, 0.0), (0.0,) * 3), 1)
    assert m.mean[0] == 5.0 and m.sigma[0] == 5.0


@pytest.mark.parametrize("seed", range(5))
def test_merge_matches_refit(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(50, 20, size=(20, 3))
    b = rng.normal(10, 5, size=(20, 3))
    m = merge_stats(fit_stats(a), 20, fit_stats(b), 20)
    ref = fit_stats(np.concatenate([a, b]))
    np.testing.assert_allclose(m.mean, ref.mean, rtol=1e-9)
    np.testing.assert_allclose(m.sigma, ref.sigma, rtol=1e-9)


def _watershed_graph(img, cfg=DEFAULT_CONFIG):
    lab = srgb_to_lab(img)
    grad = gradient_magnitude(lab)
    labels = watershed(grad)
    return labels, lab, found_graph(labels, lab, cfg, grad)


@pytest.mark.parametrize("seed", range(6))
def test_lengths_equal_pair_counts_without_shortening(seed):
    img = random_image(np.random.default_rng(seed), 20, 24)
    labels, _, g = _watershed_graph(img, L1)
    counts = pair_counts(labels)
    got = {tuple(p): g.boundaries[bid].length for bid, p in enumerate(g.atom_pairs.tolist())}
    assert got == {k: float(v) for k, v in counts.items()}


@pytest.mark.parametrize("seed", range(6))
def test_founded_graph_invariants(seed):
    img = random_image(np.random.default_rng(seed), 24, 24)
    labels, lab, g = _watershed_graph(img)
    g.check_invariants()
    assert g.mean_degree() < 6
    assert all(b.length >= MIN_BOUNDARY_LENGTH for b in g.boundaries)
    # stats oracle
    ref = atom_state(labels, lab.stack())
    for c in g.clusters:
        assert c.area == ref[c.id].area
        np.testing.assert_allclose(c.stats.mean, ref[c.id].stats.mean, rtol=1e-7, atol=1e-9)
        np.testing.assert_allclose(c.stats.sigma, ref[c.id].stats.sigma, rtol=1e-7, atol=1e-9)
    # each boundary is listed by exactly its own pair
    owners = {}
    for c in g.clusters:
        for nid, bid, _ in c.adjacency:
            owners.setdefault(bid, set()).update({c.id, nid})
    assert owners == {bid: set(p) for bid, p in enumerate(g.atom_pairs.tolist())}


@pytest.mark.parametrize("names", [(), ("wo-wasserstein",), ("gm-boundary",), ("drop-surface", "drop-linkage")])
def test_initial_terms_equal_term_functions(names):
    # the compiled founding must reproduce the python term functions exactly
    cfg = DEFAULT_CONFIG.ablate(*names)
    img = random_image(np.random.default_rng(31), 20, 20)
    labels, lab, g = _watershed_graph(img, cfg)
    grad = gradient_magnitude(lab)
    for bid, (lo, hi) in enumerate(g.atom_pairs.tolist()):
        p, q, b = g.clusters[lo], g.clusters[hi], g.boundaries[bid]
        flank = None
        if cfg.contrast_init == "gradient_mean":
            flank = _flank_values(labels, grad, lo, hi)
            assert b.contrast == pytest.approx(init_contrast(p, q, cfg, flank), rel=1e-12)
        else:
            assert b.contrast == init_contrast(p, q, cfg)
        d = cluster_distance(p, q, b, cfg)
        assert (hi, bid, d) in p.adjacency and (lo, bid, d) in q.adjacency


def _flank_values(labels, grad, lo, hi):
    values = []
    h, w = labels.shape
    for y in range(h):
        for x in range(w):
            for dy, dx in ((0, 1), (1, 0)):
                y2, x2 = y + dy, x + dx
                if y2 < h and x2 < w and {labels[y, x], labels[y2, x2]} == {lo, hi}:
                    values += [grad[y, x], grad[y2, x2]]
    return values


def test_shortening_never_increases_length():
    img = random_image(np.random.default_rng(9), 24, 24)
    _, _, g2 = _watershed_graph(img)
    _, _, g1 = _watershed_graph(img, L1)
    for b2, b1 in zip(g2.boundaries, g1.boundaries):
        assert MIN_BOUNDARY_LENGTH <= b2.length <= b1.length
        assert b2.length >= b1.length * math.sqrt(2.0) / 2.0 - 1e-12


def test_gradient_mean_contrast_on_constant_strip():
    labels = np.zeros((6, 8), dtype=int)
    labels[:, 4:] = 1
    grad = np.full(labels.shape, 3.0)
    g = found_graph(labels, flat_lab(labels), DEFAULT_CONFIG.ablate("gm-boundary"), grad)
    assert g.boundaries[0].contrast == 3.0


def test_gradient_mean_uses_flanking_pixels():
    labels = np.zeros((5, 6), dtype=int)
    labels[:, 3:] = 1
    grad = np.zeros(labels.shape)
    grad[:, 2] = 1.0
    grad[:, 3] = 5.0
    grad[:, 0] = 100.0  # far from the boundary, ignored
    g = found_graph(labels, flat_lab(labels), DEFAULT_CONFIG.ablate("gm-boundary"), grad)
    assert g.boundaries[0].contrast == 3.0
    with pytest.raises(ValueError):
        found_graph(labels, flat_lab(labels), DEFAULT_CONFIG.ablate("gm-boundary"))


def test_rejects_bad_inputs():
    labels = np.zeros((6, 6), dtype=int)
    with pytest.raises(DimensionError):
        found_graph(labels, np.zeros((6, 7, 3)))
    labels[0, 0] = 2  # label 1 missing
    with pytest.raises(ValueError):
        found_graph(labels, np.zeros((6, 6, 3)))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(5, 16), st.integers(5, 16))
def test_degree_bound_property(seed, h, w):
    img = random_image(np.random.default_rng(seed), h, w)
    _, _, g = _watershed_graph(img)
    g.check_invariants()
    assert g.mean_degree() < 6
