"""Per-stage timing of the pipeline and generated test images."""

import statistics

import numpy as np
from scipy import ndimage

from .distance import DEFAULT_CONFIG
from .pipeline import STAGES, segment

TOTAL = "serial total"


def noise_image(width, height, seed=0, smooth=2.0):
    """Band-limited colour noise: Gaussian-smoothed white noise stretched to 0..255.

    ``smooth=0`` gives white noise. The statistics do not depend on the size,
    so runtimes at different resolutions are comparable per pixel.
    """
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(height, width, 3))
    if smooth > 0:
        z = ndimage.gaussian_filter(z, (smooth, smooth, 0), mode="wrap")
    z -= z.mean(axis=(0, 1))
    z /= 3.0 * z.std(axis=(0, 1))
    return np.clip(np.rint((z + 0.5) * 255.0), 0, 255).astype(np.uint8)


def time_image(image, reps=3, cfg=DEFAULT_CONFIG):
    """Median wall time in seconds of every stage and of their sum over ``reps`` runs."""
    if reps < 1:
        raise ValueError("repetitions must be >= 1")
    samples = {name: [] for name in STAGES + (TOTAL,)}
    for _ in range(reps):
        timings = segment(image, cfg).timings
        for name in STAGES:
            samples[name].append(timings[name])
        samples[TOTAL].append(sum(timings[name] for name in STAGES))
    return {name: statistics.median(values) for name, values in samples.items()}


def warm_up():
    """Trigger JIT compilation so that it is not billed to the first measurement."""
    segment(noise_image(16, 16, seed=1))


def benchmark(images, reps=3, cfg=DEFAULT_CONFIG):
    """Rows of ``(name, width, height, stage, median seconds)``."""
    warm_up()
    rows = []
    for name, image in images:
        h, w = image.shape[:2]
        medians = time_image(image, reps, cfg)
        for stage in STAGES + (TOTAL,):
            rows.append((name, w, h, stage, medians[stage]))
    return rows


def format_report(rows):
    lines = []
    current = None
    for name, w, h, stage, seconds in rows:
        if name != current:
            current = name
            lines.append(f"{name} ({w}x{h}, {w * h} px)")
        lines.append(f"  {stage:<16s} {seconds * 1e3:10.2f} ms")
    return "\n".join(lines)
