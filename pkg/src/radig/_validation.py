"""Input validation helpers shared by the pipeline stages and the estimator."""

import numpy as np

MIN_SIDE = 5


class DimensionError(ValueError):
    """Raised when an image is too small or two arrays disagree in shape."""


def check_rgb_image(image):
    """Return ``image`` as a C-contiguous ``uint8`` array of shape (H, W, 3)."""
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DimensionError(f"expected an (H, W, 3) RGB image, got shape {arr.shape}")
    if arr.shape[0] < MIN_SIDE or arr.shape[1] < MIN_SIDE:
        raise DimensionError(
            f"image must be at least {MIN_SIDE}x{MIN_SIDE}, got {arr.shape[1]}x{arr.shape[0]}"
        )
    if arr.dtype != np.uint8:
        if np.issubdtype(arr.dtype, np.integer) and arr.min() >= 0 and arr.max() <= 255:
            arr = arr.astype(np.uint8)
        else:
            raise ValueError(f"RGB data must be 8-bit, got dtype {arr.dtype}")
    return np.ascontiguousarray(arr)


def check_plane(plane, name="plane"):
    arr = np.asarray(plane, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < MIN_SIDE or arr.shape[1] < MIN_SIDE:
        raise DimensionError(f"{name} must be at least {MIN_SIDE}x{MIN_SIDE}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_lab_image(lab):
    """Accept an (H, W, 3) array or a ``LabImage``-like object with L, a, b planes."""
    if hasattr(lab, "L"):
        arr = np.stack([lab.L, lab.a, lab.b], axis=-1)
    else:
        arr = np.asarray(lab, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DimensionError(f"expected an (H, W, 3) Lab image, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Lab image contains non-finite values")
    return np.ascontiguousarray(arr, dtype=np.float64)


def check_label_map(labels, *, dense=True):
    """Validate a per-pixel label map.

    With ``dense=True`` the labels must be exactly ``0..R-1`` with every value
    present. Connectivity is not checked here (it is O(n) but not free); see
    :func:`radig.watershed.is_valid_label_map`.
    """
    arr = np.asarray(labels)
    if arr.ndim != 2:
        raise DimensionError(f"label map must be 2-D, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError(f"label map must be integer typed, got {arr.dtype}")
    if arr.size and arr.min() < 0:
        raise ValueError("label map contains negative labels")
    arr = np.ascontiguousarray(arr, dtype=np.int64)
    if dense and arr.size:
        present = np.bincount(arr.ravel())
        if np.any(present == 0):
            missing = int(np.flatnonzero(present == 0)[0])
            raise ValueError(f"label map is not dense: label {missing} does not occur")
    return arr


def check_same_shape(a, b, what="arrays"):
    if tuple(a.shape[:2]) != tuple(b.shape[:2]):
        raise DimensionError(f"{what} differ in shape: {a.shape[:2]} vs {b.shape[:2]}")
