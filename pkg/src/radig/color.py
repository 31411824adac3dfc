"""sRGB to CIE-Lab conversion and the Lab gradient magnitude used to seed the watershed."""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ._validation import check_lab_image, check_plane, check_rgb_image

SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)

# D65 reference white as the image of RGB (1, 1, 1) under the matrix above
# (about 0.95046, 1.0, 1.08906), so that white maps to L = 100, a = b = 0.
WHITE_D65 = SRGB_TO_XYZ.sum(axis=1)

# Farid & Simoncelli 5-tap interpolator / first-derivative pair. The published
# values are rescaled so the prefilter has unit DC gain and the derivative has
# unit response to a unit ramp; scaling does not move any watershed line.
_FARID_PREFILTER = np.array(
    [0.0376593171958126, 0.249153396177344, 0.426374573253687, 0.249153396177344, 0.0376593171958126]
)
_FARID_DERIVATIVE = np.array(
    [0.109603762960254, 0.276690988455557, 0.0, -0.276690988455557, -0.109603762960254]
)
PREFILTER = _FARID_PREFILTER / _FARID_PREFILTER.sum()
# convolution form: response to f(x) = x is sum_k d[k] * (2 - k)
DERIVATIVE = _FARID_DERIVATIVE / np.dot(_FARID_DERIVATIVE, 2.0 - np.arange(5))


@dataclass(frozen=True)
class LabImage:
    """Three planar float channels in CIE-Lab units."""

    L: np.ndarray
    a: np.ndarray
    b: np.ndarray

    @property
    def shape(self):
        return self.L.shape

    def stack(self):
        """Return an (H, W, 3) array view of the planes."""
        return np.stack([self.L, self.a, self.b], axis=-1)

    @classmethod
    def from_array(cls, arr):
        arr = check_lab_image(arr)
        return cls(arr[..., 0].copy(), arr[..., 1].copy(), arr[..., 2].copy())


def _srgb_decode(c):
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _lab_f(t):
    delta = 6.0 / 29.0
    return np.where(t > delta**3, np.cbrt(t), t / (3 * delta**2) + 4.0 / 29.0)


def srgb_to_lab(image):
    """Convert an 8-bit sRGB image of shape (H, W, 3) to a :class:`LabImage`.

    Standard piecewise sRGB decoding, linear RGB to XYZ, then CIE-Lab relative
    to the D65 white point.
    """
    rgb = check_rgb_image(image).astype(np.float64) / 255.0
    linear = _srgb_decode(rgb)
    xyz = linear @ SRGB_TO_XYZ.T
    f = _lab_f(xyz / WHITE_D65)
    L = 116.0 * f[..., 1] - 16.0
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    return LabImage(L, a, b)


def derivative_5tap(plane):
    """Return ``(dx, dy)`` of a float plane using the separable 5-tap filter pair.

    ``dx`` differentiates along columns (x) and smooths along rows (y); ``dy``
    is the transpose. Borders use edge replication.
    """
    plane = check_plane(plane)
    smooth_y = ndimage.convolve1d(plane, PREFILTER, axis=0, mode="nearest")
    dx = ndimage.convolve1d(smooth_y, DERIVATIVE, axis=1, mode="nearest")
    smooth_x = ndimage.convolve1d(plane, PREFILTER, axis=1, mode="nearest")
    dy = ndimage.convolve1d(smooth_x, DERIVATIVE, axis=0, mode="nearest")
    return dx, dy


def gradient_magnitude(lab):
    """Lab gradient magnitude with separate luminance and chromaticity parts.

    ``g = sqrt(Lx^2 + Ly^2) + sqrt(2 (ax^2 + ay^2 + bx^2 + by^2))``
    """
    if not isinstance(lab, LabImage):
        lab = LabImage.from_array(lab)
    Lx, Ly = derivative_5tap(lab.L)
    ax, ay = derivative_5tap(lab.a)
    bx, by = derivative_5tap(lab.b)
    luminance = np.sqrt(Lx * Lx + Ly * Ly)
    chroma = np.sqrt(2.0 * (ax * ax + ay * ay + bx * bx + by * by))
    return luminance + chroma
