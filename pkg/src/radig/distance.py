"""Threefold cluster distance: surface dissimilarity, boundary contrast, spatial linkage.

The three parts are fused as a sum of logarithms, so they never need a common
scale. Each part can be switched off to reproduce the ablation variants.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .structures import Boundary

APPEARANCE_METRICS = ("wasserstein", "mean_sq_euclid")
CONTRAST_INITS = ("wasserstein", "gradient_mean")
LENGTH_NORMS = ("l2_approx", "l1")

ABLATIONS = (
    "gm-boundary",
    "l1-boundary",
    "wo-wasserstein",
    "drop-surface",
    "drop-boundary",
    "drop-linkage",
)


@dataclass(frozen=True)
class DistanceConfig:
    surface_on: bool = True
    boundary_on: bool = True
    linkage_on: bool = True
    appearance_metric: str = "wasserstein"
    contrast_init: str = "wasserstein"
    length_norm: str = "l2_approx"
    epsilon: float = 1e-12
    surface_weight: float = 1.0
    boundary_weight: float = 1.0
    linkage_weight: float = 1.0

    def __post_init__(self):
        if not (self.surface_on or self.boundary_on or self.linkage_on):
            raise ValueError("at least one distance term must be enabled")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.appearance_metric not in APPEARANCE_METRICS:
            raise ValueError(f"unknown appearance_metric {self.appearance_metric!r}")
        if self.contrast_init not in CONTRAST_INITS:
            raise ValueError(f"unknown contrast_init {self.contrast_init!r}")
        if self.length_norm not in LENGTH_NORMS:
            raise ValueError(f"unknown length_norm {self.length_norm!r}")

    def ablate(self, *names):
        """Return a copy with the named ablation variants applied."""
        cfg = self
        for name in names:
            if name == "gm-boundary":
                cfg = replace(cfg, contrast_init="gradient_mean")
            elif name == "l1-boundary":
                cfg = replace(cfg, length_norm="l1")
            elif name == "wo-wasserstein":
                cfg = replace(cfg, appearance_metric="mean_sq_euclid")
            elif name == "drop-surface":
                cfg = replace(cfg, surface_on=False)
            elif name == "drop-boundary":
                cfg = replace(cfg, boundary_on=False)
            elif name == "drop-linkage":
                cfg = replace(cfg, linkage_on=False)
            else:
                raise ValueError(f"unknown ablation {name!r}; choose from {', '.join(ABLATIONS)}")
        return cfg


    def kernel_args(self):
        """``(flags, epsilon, weights)`` as passed to the compiled kernels."""
        flags = np.array(
            [self.surface_on, self.boundary_on, self.linkage_on, self.appearance_metric == "wasserstein"]
        )
        weights = np.array([self.surface_weight, self.boundary_weight, self.linkage_weight], dtype=np.float64)
        return flags, float(self.epsilon), weights


DEFAULT_CONFIG = DistanceConfig()


def w1_gaussian(p, q):
    """1st Wasserstein distance between diagonal Gaussians, L1 ground metric.

    ``|mu_p - mu_q|_1 + |tr(sqrt(Sigma_p)) - tr(sqrt(Sigma_q))|``, where the
    trace of the root covariance is the sum of channel standard deviations.
    """
    mp, sp = p.mean, p.sigma
    mq, sq = q.mean, q.sigma
    return (
        abs(mp[0] - mq[0])
        + abs(mp[1] - mq[1])
        + abs(mp[2] - mq[2])
        + abs((sp[0] + sp[1] + sp[2]) - (sq[0] + sq[1] + sq[2]))
    )


def _mean_sq_euclid(p, q):
    mp, mq = p.mean, q.mean
    d0 = mp[0] - mq[0]
    d1 = mp[1] - mq[1]
    d2 = mp[2] - mq[2]
    return d0 * d0 + d1 * d1 + d2 * d2


def appearance_distance(p, q, cfg=DEFAULT_CONFIG):
    """Unsquared appearance gap between two ColorStats under ``cfg``."""
    if cfg.appearance_metric == "wasserstein":
        return w1_gaussian(p, q)
    return math.sqrt(_mean_sq_euclid(p, q))


def surface_dissimilarity(p, q, cfg=DEFAULT_CONFIG):
    """Ward-style growth in variance, lifted to the Wasserstein distance.

    ``p`` and ``q`` need ``area`` and ``stats``. With
    ``appearance_metric="mean_sq_euclid"`` this is classic Ward.
    """
    if cfg.appearance_metric == "wasserstein":
        w = w1_gaussian(p.stats, q.stats)
        gap = w * w
    else:
        gap = _mean_sq_euclid(p.stats, q.stats)
    return gap / (1.0 / p.area + 1.0 / q.area)


def spatial_linkage(p, q, b):
    """``(A_p * A_q) ** (1/4) / l_pq``."""
    if not b.length > 0:
        raise ValueError(f"boundary {b.id} has non-positive length {b.length}")
    return math.sqrt(math.sqrt(p.area * q.area)) / b.length


def init_contrast(p, q, cfg=DEFAULT_CONFIG, flank_values=None):
    """Initial contrast of the boundary between two atomic clusters.

    By default this is the appearance distance of the atoms. In
    ``gradient_mean`` mode it is the mean of the gradient samples flanking the
    boundary, passed as ``flank_values``.
    """
    if cfg.contrast_init == "gradient_mean":
        if flank_values is None or len(flank_values) == 0:
            raise ValueError("gradient_mean contrast needs the flanking gradient samples")
        return float(np.mean(flank_values))
    return appearance_distance(p.stats, q.stats, cfg)


def harmonic_contrast(l1, c1, l2, c2):
    if c1 == 0.0 or c2 == 0.0:
        return 0.0
    return (l1 + l2) / (l1 / c1 + l2 / c2)


def concat_boundaries(b1, b2, new_id):
    """Join two boundaries to the same cluster into one.

    Lengths add; the contrast is their length-weighted harmonic mean (zero if
    either contrast is zero). Both inputs get ``new_id`` as parent.
    """
    merged = Boundary(
        new_id,
        b1.length + b2.length,
        harmonic_contrast(b1.length, b1.contrast, b2.length, b2.contrast),
    )
    b1.parent = new_id
    b2.parent = new_id
    return merged


def cluster_distance(p, q, b, cfg=DEFAULT_CONFIG):
    """Sum of logs of the enabled terms, each floored at ``cfg.epsilon``."""
    # inlined copies of the term functions above; the arithmetic must stay
    # identical so that either route yields bit-equal distances
    eps = cfg.epsilon
    total = 0.0
    if cfg.surface_on:
        mp, mq = p.stats.mean, q.stats.mean
        if cfg.appearance_metric == "wasserstein":
            sp, sq = p.stats.sigma, q.stats.sigma
            w = (
                abs(mp[0] - mq[0])
                + abs(mp[1] - mq[1])
                + abs(mp[2] - mq[2])
                + abs((sp[0] + sp[1] + sp[2]) - (sq[0] + sq[1] + sq[2]))
            )
            gap = w * w
        else:
            d0 = mp[0] - mq[0]
            d1 = mp[1] - mq[1]
            d2 = mp[2] - mq[2]
            gap = d0 * d0 + d1 * d1 + d2 * d2
        omega = gap / (1.0 / p.area + 1.0 / q.area)
        total += cfg.surface_weight * math.log(omega if omega > eps else eps)
    if cfg.boundary_on:
        c = b.contrast
        total += cfg.boundary_weight * math.log(c if c > eps else eps)
    if cfg.linkage_on:
        if not b.length > 0:
            raise ValueError(f"boundary {b.id} has non-positive length {b.length}")
        eta = math.sqrt(math.sqrt(p.area * q.area)) / b.length
        total += cfg.linkage_weight * math.log(eta if eta > eps else eps)
    return total
