"""scikit-learn style front end for the segmentation pipeline."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_rgb_image
from .distance import DistanceConfig
from .evaluation import GAMMA_OBJECT, GAMMA_PART, fop_curve, ods_ois
from .pipeline import segment
from .ucm import cut, render_ucm, serialize, ucm


class RadigSegmenter(TransformerMixin, BaseEstimator, auto_wrap_output_keys=None):
    """Hierarchical segmentation of a single RGB image.

    ``fit`` builds the merge hierarchy of an (H, W, 3) uint8 image. ``predict``
    returns the label map at ``threshold`` and ``transform`` the UCM raster
    of shape (2H+1, 2W+1); both reuse the fitted hierarchy when given the
    fitted image and segment any other image afresh.

    Parameters
    ----------
    threshold : float in [0, 1]
        Cut level for ``predict``; 0 gives the watershed atoms, 1 one region.
    surface, boundary, linkage : bool
        Enable the three distance terms.
    appearance_metric : {"wasserstein", "mean_sq_euclid"}
    contrast_init : {"wasserstein", "gradient_mean"}
    length_norm : {"l2_approx", "l1"}
    epsilon : float
        Floor applied to each term before taking its logarithm.
    """

    def __init__(
        self,
        threshold=0.5,
        surface=True,
        boundary=True,
        linkage=True,
        appearance_metric="wasserstein",
        contrast_init="wasserstein",
        length_norm="l2_approx",
        epsilon=1e-12,
    ):
        self.threshold = threshold
        self.surface = surface
        self.boundary = boundary
        self.linkage = linkage
        self.appearance_metric = appearance_metric
        self.contrast_init = contrast_init
        self.length_norm = length_norm
        self.epsilon = epsilon

    def distance_config(self):
        return DistanceConfig(
            surface_on=self.surface,
            boundary_on=self.boundary,
            linkage_on=self.linkage,
            appearance_metric=self.appearance_metric,
            contrast_init=self.contrast_init,
            length_norm=self.length_norm,
            epsilon=self.epsilon,
        )

    def _check_threshold(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {self.threshold}")

    def fit(self, X, y=None):
        self._check_threshold()
        X = check_rgb_image(X)
        result = segment(X, self.distance_config())
        self.image_ = X
        self.lab_ = result.lab
        self.gradient_ = result.gradient
        self.atoms_ = result.atoms
        self.hierarchy_ = result.hierarchy
        self.levels_ = result.levels
        self.timings_ = result.timings
        self.n_atoms_ = result.hierarchy.atom_count
        self.labels_ = cut(self.hierarchy_, self.levels_, self.threshold)
        return self

    def _fitted_for(self, X):
        if X is None:
            check_is_fitted(self, "hierarchy_")
            return self
        X = check_rgb_image(X)
        if hasattr(self, "image_") and X.shape == self.image_.shape and np.array_equal(X, self.image_):
            return self
        return type(self)(**self.get_params()).fit(X)

    def predict(self, X=None):
        """Label map of ``X`` (default: the fitted image) at ``self.threshold``."""
        self._check_threshold()
        fitted = self._fitted_for(X)
        return cut(fitted.hierarchy_, fitted.levels_, self.threshold)

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_

    def transform(self, X=None):
        """UCM raster of ``X`` (default: the fitted image), values in [0, 1]."""
        fitted = self._fitted_for(X)
        return render_ucm(ucm(fitted.hierarchy_, fitted.levels_))

    def cut(self, t):
        check_is_fitted(self, "hierarchy_")
        return cut(self.hierarchy_, self.levels_, t)

    def crack_map(self):
        check_is_fitted(self, "hierarchy_")
        return ucm(self.hierarchy_, self.levels_)

    def to_json(self):
        check_is_fitted(self, "hierarchy_")
        return serialize(self.hierarchy_, self.levels_)

    def score(self, X, y, gamma_object=GAMMA_OBJECT, gamma_part=GAMMA_PART):
        """Best object-and-parts F over the hierarchy's thresholds against ground truth ``y``."""
        fitted = self._fitted_for(X)
        curve = fop_curve(
            (fitted.hierarchy_, fitted.levels_), y, gamma_object=gamma_object, gamma_part=gamma_part
        )
        best, _ = ods_ois([curve])
        return best.f
