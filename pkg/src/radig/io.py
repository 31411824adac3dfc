"""Image and label-map file I/O (PNG, binary PPM)."""

from pathlib import Path

import numpy as np
from PIL import Image

from ._validation import check_rgb_image


def read_image(path):
    """Read an 8-bit RGB image (PNG or binary PPM) as an (H, W, 3) uint8 array."""
    with Image.open(path) as im:
        if im.mode not in ("RGB", "L", "P", "RGBA", "LA"):
            raise ValueError(f"{path}: unsupported image mode {im.mode}")
        return check_rgb_image(np.array(im.convert("RGB")))


def write_image(path, rgb):
    Image.fromarray(check_rgb_image(rgb)).save(path)


def write_label_map(path, labels):
    """Write labels as a 16-bit grayscale PNG."""
    labels = np.asarray(labels)
    if labels.size and labels.max() > 0xFFFF:
        raise ValueError(f"{path}: {labels.max() + 1} labels do not fit in 16 bits")
    Image.fromarray(labels.astype(np.uint16)).save(path)


def read_label_map(path):
    with Image.open(path) as im:
        arr = np.array(im)
    if arr.ndim == 3:
        # RGB-encoded label maps: pack the channels into one integer id
        arr = arr[..., 0].astype(np.int64) << 16 | arr[..., 1].astype(np.int64) << 8 | arr[..., 2]
    return arr.astype(np.int64)


def write_gray(path, values, bits=8):
    """Write a uint8/uint16 array as grayscale PNG."""
    values = np.asarray(values)
    dtype = np.uint8 if bits == 8 else np.uint16
    Image.fromarray(values.astype(dtype)).save(path)


def read_gray(path):
    """Read a grayscale PNG and return ``(values, max_value)`` for its bit depth."""
    with Image.open(path) as im:
        mode = im.mode
        arr = np.array(im)
    if arr.ndim == 3:
        arr = arr[..., 0]
    top = 255 if mode in ("L", "P") or arr.dtype == np.uint8 else 65535
    return arr.astype(np.float64), top


def image_stem(path):
    return Path(path).stem
