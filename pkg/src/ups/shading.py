"""Image formation under directional and first-order spherical-harmonics light.

First-order SH images are exactly linear: ``I = L @ M`` where each column of
``M`` is ``rho * (1, n1, n2, n3)``.  No self-shadow term and no clamping is
applied, so clean renders factorize exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BadParamsError,
    DimensionMismatchError,
    RankDeficientLightingError,
)
from .geometry import NormalField
from .grid import PixelGrid, check_same_mask

SH1_RELATIVE_TOL = 1e-10
RANK_SV_RATIO = 1e-6


@dataclass
class AlbedoMap:
    grid: PixelGrid

    def __post_init__(self):
        if self.grid.channels != 1:
            raise BadParamsError("albedo grid must be single-channel")
        rho = self.grid.masked()
        if rho.size and not (rho > 0).all():
            raise BadParamsError("albedo must be > 0 on the mask")


@dataclass
class MField:
    """Per-pixel 4-vector rho * (1, n); the central unknown of the problem."""

    grid: PixelGrid

    def __post_init__(self):
        if self.grid.channels != 4:
            raise BadParamsError("m-field grid must have 4 channels")
        c = self.grid.masked()
        if c.size == 0:
            return
        if not (c[:, 0] > 0).all():
            raise BadParamsError("m-field requires c1 > 0")
        if not (c[:, 3] < 0).all():
            raise BadParamsError("m-field requires c4 < 0")
        lhs = c[:, 0] ** 2
        rhs = (c[:, 1:] ** 2).sum(axis=1)
        if np.max(np.abs(lhs - rhs) / lhs) > SH1_RELATIVE_TOL:
            raise BadParamsError("m-field violates c1^2 = c2^2 + c3^2 + c4^2")

    def split(self) -> tuple[AlbedoMap, NormalField]:
        """Invert the construction: rho = c1, n = (c2, c3, c4) / c1."""
        vals = self.grid.values
        mask = self.grid.mask
        rho = np.where(mask, vals[..., 0], 0.0)
        safe = np.where(mask, vals[..., 0], 1.0)
        n = vals[..., 1:] / safe[..., None]
        n[~mask] = 0.0
        return (
            AlbedoMap(PixelGrid(rho, mask.copy())),
            NormalField(PixelGrid(n, mask.copy())),
        )


@dataclass
class ImageStack:
    """m images flattened to an (m, n) matrix over a shared pixel mask."""

    images: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.images.ndim != 2:
            raise BadParamsError("image stack must be a 2-D (m, n) matrix")
        if self.images.shape[1] != int(self.mask.sum()):
            raise DimensionMismatchError(
                f"{self.images.shape[1]} columns for {int(self.mask.sum())} mask pixels"
            )

    @property
    def m_images(self) -> int:
        return self.images.shape[0]

    @property
    def n_pixels(self) -> int:
        return self.images.shape[1]

    def image_grid(self, i: int) -> PixelGrid:
        """Reconstruct the i-th image as a 2-D grid."""
        return PixelGrid.from_columns(self.images[i : i + 1], self.mask)


def lighting_rank(L: np.ndarray) -> int:
    s = np.linalg.svd(np.asarray(L, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int((s / s[0] > RANK_SV_RATIO).sum())


def build_mfield(rho: AlbedoMap, n: NormalField) -> MField:
    """Columns rho * (1, n1, n2, n3) on the shared mask."""
    check_same_mask(rho.grid.mask, n.grid.mask)
    mask = rho.grid.mask
    r = rho.grid.values
    vals = np.concatenate([np.ones_like(r)[..., None], n.grid.values], axis=-1)
    vals = vals * np.where(mask, r, 0.0)[..., None]
    return MField(PixelGrid(vals, mask.copy()))


def transform_mfield(A: np.ndarray, mf) -> PixelGrid:
    """Apply a 4x4 transform per pixel; the result is a plain 4-channel grid.

    A generic linear transform breaks the m-field quadric constraint, which
    is the whole point of the ambiguity experiments, so no MField is built.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (4, 4):
        raise DimensionMismatchError("transform must be 4x4")
    grid = mf.grid if hasattr(mf, "grid") else mf
    cols = A @ grid.columns()
    return PixelGrid.from_columns(cols, grid.mask)


def sample_sh1_lighting(m: int, seed: int, ambient_floor: float = 0.35) -> np.ndarray:
    """Random (m, 4) lighting matrix of rank 4 with a guaranteed ambient part.

    Each row is s * (alpha, sqrt(1 - alpha^2) * d) with alpha >= ambient_floor,
    so rendered intensities are predominantly positive.
    """
    if m < 4:
        raise BadParamsError("SH1 lighting needs at least 4 images")
    if not 0 <= ambient_floor < 1:
        raise BadParamsError("ambient_floor must be in [0, 1)")
    rng = np.random.default_rng(seed)
    for _ in range(100):
        alpha = rng.uniform(ambient_floor, 0.9, size=m)
        scale = rng.uniform(0.6, 1.6, size=m)
        d = rng.normal(size=(m, 3))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        L = np.empty((m, 4))
        L[:, 0] = alpha
        L[:, 1:] = np.sqrt(1 - alpha**2)[:, None] * d
        L *= scale[:, None]
        if lighting_rank(L) == 4:
            return L
    raise RankDeficientLightingError("failed to sample a rank-4 lighting matrix")


def render_sh1(mf, L: np.ndarray) -> ImageStack:
    """I = L @ M exactly; accepts an MField or a raw 4-channel grid."""
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[1] != 4:
        raise DimensionMismatchError("SH1 lighting matrix must have 4 columns")
    grid = mf.grid if hasattr(mf, "grid") else mf
    return ImageStack(L @ grid.columns(), grid.mask.copy())


def render_directional(rho: AlbedoMap, n: NormalField, L3: np.ndarray) -> ImageStack:
    """I_i(x) = rho(x) * n(x)^T l_i, negative values kept."""
    L3 = np.asarray(L3, dtype=float)
    if L3.ndim != 2 or L3.shape[1] != 3:
        raise DimensionMismatchError("directional lighting matrix must have 3 columns")
    check_same_mask(rho.grid.mask, n.grid.mask)
    m_cols = n.grid.columns() * rho.grid.columns()
    return ImageStack(L3 @ m_cols, rho.grid.mask.copy())


def solve_calibrated_directional(I: ImageStack, L3: np.ndarray) -> tuple[AlbedoMap, NormalField]:
    """Per-pixel least squares m = pinv(L) i; rho = |m|, n = m / |m|."""
    L3 = np.asarray(L3, dtype=float)
    if L3.ndim != 2 or L3.shape[1] != 3:
        raise DimensionMismatchError("directional lighting matrix must have 3 columns")
    if L3.shape[0] != I.m_images:
        raise DimensionMismatchError("lighting rows must match image count")
    if L3.shape[0] < 3 or lighting_rank(L3) < 3:
        raise RankDeficientLightingError("directional solve needs rank-3 lighting")
    M = np.linalg.pinv(L3) @ I.images
    rho = np.linalg.norm(M, axis=0)
    safe = np.where(rho > 0, rho, 1.0)
    N = M / safe
    return (
        AlbedoMap(PixelGrid.from_columns(rho[None, :], I.mask)),
        NormalField(PixelGrid.from_columns(N, I.mask)),
    )


def add_gaussian_noise(I: ImageStack, sigma_pct: float, seed: int) -> ImageStack:
    """Add zero-mean Gaussian noise with std = sigma_pct% of max |I|."""
    if sigma_pct < 0:
        raise BadParamsError("sigma_pct must be >= 0")
    if sigma_pct == 0:
        return ImageStack(I.images.copy(), I.mask.copy())
    sigma = sigma_pct / 100.0 * np.abs(I.images).max()
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(I.images.shape)
    return ImageStack(I.images + sigma * noise, I.mask.copy())
