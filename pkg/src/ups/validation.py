"""Input checks for the estimator layer (array-in, array-out surfaces)."""

from __future__ import annotations

import numpy as np

from .errors import BadParamsError, DimensionMismatchError
from .shading import ImageStack


def check_images_array(X) -> np.ndarray:
    """Validate an (m, rows, cols) stack of 2-D images."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3:
        raise DimensionMismatchError("expected an (m, rows, cols) image stack")
    if not np.isfinite(X).all():
        raise BadParamsError("image stack contains non-finite values")
    return X


def check_mask(mask, rows: int, cols: int) -> np.ndarray:
    if mask is None:
        return np.ones((rows, cols), dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (rows, cols):
        raise DimensionMismatchError(f"mask shape {mask.shape} != {(rows, cols)}")
    if not mask.any():
        raise BadParamsError("mask selects no pixel")
    return mask


def stack_from_array(X, mask=None) -> ImageStack:
    """Build an ImageStack from (m, rows, cols) images plus an optional mask."""
    X = check_images_array(X)
    m, rows, cols = X.shape
    mask = check_mask(mask, rows, cols)
    return ImageStack(X[:, mask], mask)
