import gc
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from oracles import random_image
from radig.agglomerate import agglomerate
from radig.color import gradient_magnitude, srgb_to_lab
from radig.graph import found_graph
from radig.pipeline import STAGES, gc_paused, segment
from radig.watershed import watershed


@pytest.fixture()
def gc_enabled():
    was = gc.isenabled()
    gc.enable()
    yield
    if not was:
        gc.disable()


def test_segment_matches_stage_by_stage():
    img = random_image(np.random.default_rng(2), 18, 18)
    r = segment(img)
    lab = srgb_to_lab(img)
    grad = gradient_magnitude(lab)
    atoms = watershed(grad)
    h = agglomerate(found_graph(atoms, lab, gradient=grad), engine="python")
    np.testing.assert_array_equal(r.atoms, atoms)
    assert r.hierarchy.events == h.events
    assert set(r.timings) == set(STAGES) and all(t >= 0 for t in r.timings.values())


def test_gc_paused_restores_state(gc_enabled):
    with gc_paused():
        assert not gc.isenabled()
        with gc_paused():
            assert not gc.isenabled()
        assert not gc.isenabled()
    assert gc.isenabled()
    with pytest.raises(RuntimeError):
        with gc_paused():
            raise RuntimeError("boom")
    assert gc.isenabled()


def test_gc_paused_keeps_disabled_collector_off(gc_enabled):
    gc.disable()
    with gc_paused():
        pass
    assert not gc.isenabled()
    gc.enable()


def test_concurrent_segmentations(gc_enabled):
    images = [random_image(np.random.default_rng(k), 16, 16) for k in range(6)]
    serial = [segment(img).hierarchy.events for img in images]
    with ThreadPoolExecutor(max_workers=3) as pool:
        parallel = [r.hierarchy.events for r in pool.map(segment, images)]
    assert parallel == serial
    assert gc.isenabled()
