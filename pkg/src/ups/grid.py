"""Masked pixel grids and the camera model.

Conventions used throughout the package:

* a grid is stored row-major with shape ``(rows, cols)`` or
  ``(rows, cols, channels)``;
* ``u`` is the horizontal pixel coordinate (columns, axis 1), ``v`` the
  vertical one (rows, axis 0), both expressed relative to the principal
  point;
* the pixel pitch is 1 and the focal length is given in pixels;
* masked pixels are enumerated in row-major order, which fixes the column
  order of every flattened representation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadParamsError, EmptyDomainError, WrongProjectionError

ORTHOGRAPHIC = "orthographic"
PERSPECTIVE = "perspective"


@dataclass
class PixelGrid:
    """Per-pixel scalar or small-vector values restricted to a boolean mask."""

    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.values.ndim not in (2, 3):
            raise BadParamsError("values must have shape (rows, cols[, channels])")
        if self.mask.shape != self.values.shape[:2]:
            raise BadParamsError(
                f"mask shape {self.mask.shape} does not match values {self.values.shape[:2]}"
            )

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.values.ndim == 2 else self.values.shape[2]

    @property
    def n_pixels(self) -> int:
        return int(self.mask.sum())

    def masked(self) -> np.ndarray:
        """Values at masked pixels, shape (n,) or (n, channels), row-major order."""
        return self.values[self.mask]

    def columns(self) -> np.ndarray:
        """Masked values as a (channels, n) column matrix."""
        m = self.masked()
        if m.ndim == 1:
            return m[None, :]
        return m.T

    @classmethod
    def from_columns(cls, columns: np.ndarray, mask: np.ndarray) -> "PixelGrid":
        """Scatter a (channels, n) column matrix back onto a masked grid."""
        columns = np.asarray(columns, dtype=np.float64)
        mask = np.asarray(mask, dtype=bool)
        if columns.ndim == 1:
            columns = columns[None, :]
        c, n = columns.shape
        if n != int(mask.sum()):
            raise BadParamsError(f"{n} columns for {int(mask.sum())} mask pixels")
        if c == 1:
            values = np.zeros(mask.shape)
            values[mask] = columns[0]
        else:
            values = np.zeros(mask.shape + (c,))
            values[mask] = columns.T
        return cls(values, mask.copy())

    def require_nonempty(self) -> None:
        if not self.mask.any():
            raise EmptyDomainError("mask selects no pixel")


@dataclass(frozen=True)
class CameraModel:
    """Pinhole or orthographic camera; ``(u, v)`` are offsets from the principal point."""

    projection: str
    focal: float | None = None
    principal_point: tuple[float, float] | None = None

    def __post_init__(self):
        if self.projection not in (ORTHOGRAPHIC, PERSPECTIVE):
            raise BadParamsError(f"unknown projection {self.projection!r}")
        if self.projection == PERSPECTIVE:
            if self.focal is None or not self.focal > 0:
                raise BadParamsError("perspective camera requires focal > 0")

    @classmethod
    def orthographic(cls, principal_point=None) -> "CameraModel":
        return cls(ORTHOGRAPHIC, None, principal_point)

    @classmethod
    def perspective(cls, focal: float, principal_point=None) -> "CameraModel":
        return cls(PERSPECTIVE, float(focal), principal_point)

    @property
    def is_perspective(self) -> bool:
        return self.projection == PERSPECTIVE

    def require_perspective(self) -> None:
        if not self.is_perspective:
            raise WrongProjectionError("operation requires a perspective camera")

    def require_orthographic(self) -> None:
        if self.is_perspective:
            raise WrongProjectionError("operation requires an orthographic camera")

    def pixel_coords(self, rows: int, cols: int) -> tuple[np.ndarray, np.ndarray]:
        """Return (U, V) coordinate grids relative to the principal point."""
        if self.principal_point is None:
            u0, v0 = (cols - 1) / 2.0, (rows - 1) / 2.0
        else:
            u0, v0 = self.principal_point
        u = np.arange(cols, dtype=np.float64) - u0
        v = np.arange(rows, dtype=np.float64) - v0
        return np.tile(u, (rows, 1)), np.tile(v[:, None], (1, cols))


def check_same_mask(a: np.ndarray, b: np.ndarray) -> None:
    from .errors import MaskMismatchError

    if a.shape != b.shape or not np.array_equal(a, b):
        raise MaskMismatchError("operands live on different masks")
