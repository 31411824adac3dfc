"""End-to-end segmentation of one image, with per-stage wall-clock timing."""

import gc
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

from .agglomerate import agglomerate
from .color import gradient_magnitude, srgb_to_lab
from .distance import DEFAULT_CONFIG
from .graph import found_graph
from .ucm import monotonize
from .watershed import watershed

# stage names as reported by the benchmark
STAGES = ("colorspace", "watershed", "founding tree", "agg. clustering")


_gc_lock = threading.Lock()
_gc_depth = 0
_gc_was_enabled = False


@contextmanager
def gc_paused():
    """Suspend the cyclic garbage collector; reference counting still frees memory.

    The pipeline allocates many small acyclic objects. Left on, generational
    collections keep rescanning the growing region graph, which makes the run
    time superlinear in the image size. Safe to nest and to use from several
    threads at once.
    """
    global _gc_depth, _gc_was_enabled
    with _gc_lock:
        if _gc_depth == 0:
            _gc_was_enabled = gc.isenabled()
            gc.disable()
        _gc_depth += 1
    try:
        yield
    finally:
        with _gc_lock:
            _gc_depth -= 1
            if _gc_depth == 0 and _gc_was_enabled:
                gc.enable()


@dataclass
class SegmentationResult:
    lab: object
    gradient: object
    atoms: object
    hierarchy: object
    levels: object
    timings: dict = field(default_factory=dict)


def segment(image, cfg=DEFAULT_CONFIG):
    """Run colour conversion, watershed, graph founding and agglomeration."""
    with gc_paused():
        return _segment(image, cfg)


def _segment(image, cfg):
    timings = {}
    t0 = time.perf_counter()
    lab = srgb_to_lab(image)
    t1 = time.perf_counter()
    gradient = gradient_magnitude(lab)
    atoms = watershed(gradient)
    t2 = time.perf_counter()
    graph = found_graph(atoms, lab, cfg, gradient=gradient)
    t3 = time.perf_counter()
    hierarchy = agglomerate(graph, cfg)
    t4 = time.perf_counter()
    for name, (a, b) in zip(STAGES, ((t0, t1), (t1, t2), (t2, t3), (t3, t4))):
        timings[name] = b - a
    return SegmentationResult(lab, gradient, atoms, hierarchy, monotonize(hierarchy.events), timings)
