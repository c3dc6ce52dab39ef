"""Derived c-fields, integrability residuals and the stacked linear systems.

For a 4-component field ``c`` the derived fields are

    c^{i,j}_k = c_j * d(c_i)/dk - c_i * d(c_j)/dk,   1 <= i < j <= 4, k in {u, v},

stored for the fixed pair order (1,2), (1,3), (1,4), (2,3), (2,4), (3,4).

Column order of the stacked systems (one row per mask pixel):

Orthographic, 11 columns, paired with minors of the ambiguity matrix A
(the twelfth term is folded in by substituting c^{2,4}_v -> c^{3,4}_u):

    col  entry           multiplies
    0    c^{1,2}_v       A^{2,1}_{4,2}
    1    c^{1,3}_v       A^{2,1}_{4,3}
    2    c^{1,4}_v       A^{2,1}_{4,4}
    3    c^{2,3}_v       A^{2,2}_{4,3}
    4    c^{3,4}_v       A^{2,3}_{4,4}
    5    -c^{1,2}_u      A^{3,1}_{4,2}
    6    -c^{1,3}_u      A^{3,1}_{4,3}
    7    -c^{1,4}_u      A^{3,1}_{4,4}
    8    -c^{2,3}_u      A^{3,2}_{4,3}
    9    -c^{2,4}_u      A^{3,2}_{4,4}
    10   c^{3,4}_u       A^{2,2}_{4,4} - A^{3,3}_{4,4}

Perspective, 18 columns, three blocks of six in pair order:

    cols 0-5    u c^{i,j}_u + v c^{i,j}_v    A^{2,.}_{3,.}  (row pair 2,3)
    cols 6-11   f c^{i,j}_v                  A^{2,.}_{4,.}  (row pair 2,4)
    cols 12-17  -f c^{i,j}_u                 A^{3,.}_{4,.}  (row pair 3,4)

The reduced 17-column variant drops column 3 (the c^{2,3} combination).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadParamsError,
    EmptyDomainError,
    TooFewPixelsError,
)
from .geometry import channel_gradients
from .grid import CameraModel, PixelGrid
from .lorentz import minor2

PAIRS = ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4))
PAIR_INDEX = {p: i for i, p in enumerate(PAIRS)}

ORTHO11 = "ortho11"
PERSP18 = "persp18"
PERSP17 = "persp17"

DEGENERACY_THRESHOLD = 1e-8
PATTERN_TOL = 1e-6
C4_GUARD = 1e-12


def _as_grid4(m) -> PixelGrid:
    grid = m.grid if hasattr(m, "grid") else m
    if grid.channels not in (3, 4):
        raise BadParamsError("expected a 3- or 4-channel per-pixel field")
    return grid


@dataclass
class CDerivedFields:
    """All twelve c^{i,j}_k fields on the derivative-eroded mask."""

    cu: np.ndarray  # (6, rows, cols), pair order PAIRS
    cv: np.ndarray
    values: np.ndarray  # the field samples themselves, (rows, cols, 4)
    mask: np.ndarray

    def get(self, i: int, j: int, axis: str) -> np.ndarray:
        idx = PAIR_INDEX[(i, j)]
        return self.cu[idx] if axis == "u" else self.cv[idx]

    @property
    def n_pixels(self) -> int:
        return int(self.mask.sum())


def c_fields(m, scheme: str = "central") -> CDerivedFields:
    """Compute every c^{i,j}_k; accepts an MField or a raw 4-channel grid."""
    grid = _as_grid4(m)
    if grid.channels != 4:
        raise BadParamsError("c_fields needs 4 components")
    du, dv, mask = channel_gradients(grid, scheme)
    if not mask.any():
        raise EmptyDomainError("derivative mask is empty")
    vals = grid.values
    cu = np.empty((6,) + mask.shape)
    cv = np.empty((6,) + mask.shape)
    for idx, (i, j) in enumerate(PAIRS):
        a, b = i - 1, j - 1
        cu[idx] = vals[..., b] * du[..., a] - vals[..., a] * du[..., b]
        cv[idx] = vals[..., b] * dv[..., a] - vals[..., a] * dv[..., b]
    cu[:, ~mask] = 0.0
    cv[:, ~mask] = 0.0
    return CDerivedFields(cu, cv, vals.copy(), mask)


def cross_product_fields(cf: CDerivedFields) -> tuple[np.ndarray, np.ndarray]:
    """(rho n) x (rho n)_k assembled from c-fields, for k = u and v.

    Component order: (-c^{3,4}_k, c^{2,4}_k, -c^{2,3}_k).
    """
    xu = np.stack([-cf.get(3, 4, "u"), cf.get(2, 4, "u"), -cf.get(2, 3, "u")], axis=-1)
    xv = np.stack([-cf.get(3, 4, "v"), cf.get(2, 4, "v"), -cf.get(2, 3, "v")], axis=-1)
    return xu, xv


def ortho_residual(m, scheme: str = "central") -> PixelGrid:
    """(c2_v - c3_u) c4 + c4_u c3 - c4_v c2; zero iff orthographic-integrable.

    Pixels with |c4| below 1e-12 * max|c4| are dropped from the mask and
    reported (grazing normals make the constraint uninformative there).
    """
    cf = c_fields(m, scheme)
    res = cf.get(2, 4, "v") - cf.get(3, 4, "u")
    mask = cf.mask.copy()
    c4 = np.abs(cf.values[..., 3])
    guard = C4_GUARD * (c4[mask].max() if mask.any() else 0.0)
    bad = mask & (c4 <= guard)
    if bad.any():
        warnings.warn(f"ortho_residual: dropped {int(bad.sum())} pixels with vanishing c4")
        mask &= ~bad
    if not mask.any():
        raise EmptyDomainError("no pixel with usable c4")
    return PixelGrid(np.where(mask, res, 0.0), mask)


def persp_residual_m3(m, camera: CameraModel, scheme: str = "central") -> PixelGrid:
    """Perspective integrability residual of a 3-component rho*n field.

    u(m1 m2u - m1u m2) + v(m1 m2v - m1v m2) + f(m1 m3v - m1v m3)
    + f(m2u m3 - m2 m3u); zero iff the underlying normals are integrable.
    """
    camera.require_perspective()
    grid = _as_grid4(m)
    if grid.channels != 3:
        raise BadParamsError("persp_residual_m3 expects a 3-channel field")
    du, dv, mask = channel_gradients(grid, scheme)
    vals = grid.values
    u, v = camera.pixel_coords(grid.rows, grid.cols)
    f = camera.focal
    res = (
        u * (vals[..., 0] * du[..., 1] - du[..., 0] * vals[..., 1])
        + v * (vals[..., 0] * dv[..., 1] - dv[..., 0] * vals[..., 1])
        + f * (vals[..., 0] * dv[..., 2] - dv[..., 0] * vals[..., 2])
        + f * (du[..., 1] * vals[..., 2] - vals[..., 1] * du[..., 2])
    )
    return PixelGrid(np.where(mask, res, 0.0), mask)


def persp_residual_m4(m, camera: CameraModel, scheme: str = "central") -> PixelGrid:
    """u c^{2,3}_u + v c^{2,3}_v + f c^{2,4}_v - f c^{3,4}_u on the eroded mask."""
    camera.require_perspective()
    cf = c_fields(m, scheme)
    u, v = camera.pixel_coords(*cf.mask.shape)
    f = camera.focal
    res = (
        u * cf.get(2, 3, "u")
        + v * cf.get(2, 3, "v")
        + f * cf.get(2, 4, "v")
        - f * cf.get(3, 4, "u")
    )
    return PixelGrid(np.where(cf.mask, res, 0.0), cf.mask.copy())


@dataclass
class IntegrabilityMatrix:
    """Stacked per-pixel integrability rows (raw, unnormalized)."""

    kind: str
    data: np.ndarray  # (n_pixels, n_cols)
    mask: np.ndarray
    cfields: CDerivedFields | None = field(default=None, repr=False)

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_cols(self) -> int:
        return self.data.shape[1]


def build_ortho_matrix(cf: CDerivedFields) -> IntegrabilityMatrix:
    """11-column orthographic system; see the module docstring for the order."""
    if not cf.mask.any():
        raise EmptyDomainError("empty derivative mask")
    m = cf.mask
    cols = [
        cf.cv[PAIR_INDEX[(1, 2)]][m],
        cf.cv[PAIR_INDEX[(1, 3)]][m],
        cf.cv[PAIR_INDEX[(1, 4)]][m],
        cf.cv[PAIR_INDEX[(2, 3)]][m],
        cf.cv[PAIR_INDEX[(3, 4)]][m],
        -cf.cu[PAIR_INDEX[(1, 2)]][m],
        -cf.cu[PAIR_INDEX[(1, 3)]][m],
        -cf.cu[PAIR_INDEX[(1, 4)]][m],
        -cf.cu[PAIR_INDEX[(2, 3)]][m],
        -cf.cu[PAIR_INDEX[(2, 4)]][m],
        cf.cu[PAIR_INDEX[(3, 4)]][m],
    ]
    return IntegrabilityMatrix(ORTHO11, np.stack(cols, axis=1), cf.mask.copy(), cf)


def build_persp_matrix(
    cf: CDerivedFields, camera: CameraModel, reduced: bool = False
) -> IntegrabilityMatrix:
    """18-column (or reduced 17-column) perspective system."""
    camera.require_perspective()
    if not cf.mask.any():
        raise EmptyDomainError("empty derivative mask")
    m = cf.mask
    u, v = camera.pixel_coords(*m.shape)
    f = camera.focal
    um, vm = u[m], v[m]
    blocks = []
    for idx in range(6):
        blocks.append(um * cf.cu[idx][m] + vm * cf.cv[idx][m])
    for idx in range(6):
        blocks.append(f * cf.cv[idx][m])
    for idx in range(6):
        blocks.append(-f * cf.cu[idx][m])
    data = np.stack(blocks, axis=1)
    if reduced:
        data = np.delete(data, 3, axis=1)
        return IntegrabilityMatrix(PERSP17, data, cf.mask.copy(), cf)
    return IntegrabilityMatrix(PERSP18, data, cf.mask.copy(), cf)


def ortho_minor_vector(A: np.ndarray) -> np.ndarray:
    """The 11 minor combinations multiplying the orthographic columns."""
    return np.array(
        [
            minor2(A, (2, 4), (1, 2)),
            minor2(A, (2, 4), (1, 3)),
            minor2(A, (2, 4), (1, 4)),
            minor2(A, (2, 4), (2, 3)),
            minor2(A, (2, 4), (3, 4)),
            minor2(A, (3, 4), (1, 2)),
            minor2(A, (3, 4), (1, 3)),
            minor2(A, (3, 4), (1, 4)),
            minor2(A, (3, 4), (2, 3)),
            minor2(A, (3, 4), (2, 4)),
            minor2(A, (2, 4), (2, 4)) - minor2(A, (3, 4), (3, 4)),
        ]
    )


def persp_minor_vector(A: np.ndarray) -> np.ndarray:
    """The 18 minors multiplying the perspective columns, in column order."""
    out = []
    for rows in ((2, 3), (2, 4), (3, 4)):
        for cols in ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)):
            out.append(minor2(A, rows, cols))
    return np.array(out)


@dataclass
class DegeneracyReport:
    singular_values: np.ndarray
    condition_ratio: float
    degenerate: bool
    matched_pattern: str | None
    threshold: float


def _match_pattern(cf: CDerivedFields) -> str:
    m = cf.mask
    amp = max(np.abs(cf.cu[:, m]).max(), np.abs(cf.cv[:, m]).max())
    if amp == 0:
        return "planar"
    tol = PATTERN_TOL * amp
    u_amp = np.abs(cf.cu[:, m]).max()
    v_amp = np.abs(cf.cv[:, m]).max()
    if u_amp <= tol and v_amp <= tol:
        return "planar"
    if u_amp <= tol:
        return "n_u = 0"
    if v_amp <= tol:
        return "n_v = 0"
    if np.abs(cf.cu[:, m] - cf.cv[:, m]).max() <= tol:
        return "n_u = n_v"
    if np.abs(cf.cu[:, m] + cf.cv[:, m]).max() <= tol:
        return "n_u = -n_v"
    return "unclassified"


def degeneracy_report(
    im: IntegrabilityMatrix, threshold: float = DEGENERACY_THRESHOLD
) -> DegeneracyReport:
    """SVD-based rank analysis of row-normalized integrability rows.

    Orthographic (and reduced perspective) systems are degenerate when the
    smallest singular value collapses; the full 18-column perspective system
    keeps one expected null direction, so its *second*-smallest singular
    value is tested instead.
    """
    if im.n_rows < im.n_cols:
        raise TooFewPixelsError(f"{im.n_rows} rows for {im.n_cols} unknowns")
    norms = np.linalg.norm(im.data, axis=1, keepdims=True)
    normalized = np.divide(im.data, norms, out=np.zeros_like(im.data), where=norms > 0)
    s = np.linalg.svd(normalized, compute_uv=False)
    k = im.n_cols - 2 if im.kind == PERSP18 else im.n_cols - 1
    ratio = float(s[k] / s[0]) if s[0] > 0 else 0.0
    degenerate = ratio < threshold
    pattern = None
    if degenerate and im.cfields is not None:
        pattern = _match_pattern(im.cfields)
    return DegeneracyReport(s, ratio, degenerate, pattern, threshold)
