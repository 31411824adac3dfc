"""Realtime hierarchical image segmentation by region-graph agglomeration."""

from .agglomerate import ConnectivityError, Hierarchy, MergeEvent, agglomerate
from .color import LabImage, gradient_magnitude, srgb_to_lab
from .distance import ABLATIONS, DEFAULT_CONFIG, DistanceConfig, cluster_distance
from .estimator import RadigSegmenter
from .evaluation import GroundTruth, fb_curve, fop_curve, labels_to_instances, ods_ois
from .graph import RegionGraph, found_graph
from .pipeline import SegmentationResult, segment
from .ucm import CrackMap, UcmLevels, cut, monotonize, parse, render_ucm, serialize, ucm
from .watershed import watershed

__version__ = "0.1.0"
