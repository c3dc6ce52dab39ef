"""Depth maps, finite differences, normal fields and procedural shapes.

Shapes are generated from a normalized profile ``zeta(x, y)`` with
``x = u / half`` and ``y = v / half`` where ``half = (min(rows, cols) - 1) / 2``;
the stored depth is ``z = half * zeta``.  Under this convention a scene
re-rendered at a new grid size with the focal length scaled proportionally
samples the *same* continuous surface, which is what grid-refinement studies
rely on.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadParamsError,
    EmptyDomainError,
    NonPositiveDepthError,
)
from .grid import CameraModel, PixelGrid

UNIT_NORM_TOL = 1e-12

SHAPE_KINDS = (
    "plane",
    "gaussian_bump",
    "sphere_cap",
    "multi_bump",
    "cylinder_u",
    "cylinder_v",
    "ridge_diag",
)

# Shapes whose normal field loses rank in the integrability analysis.
DEGENERATE_KINDS = ("plane", "cylinder_u", "cylinder_v", "ridge_diag")

# Default multi-bump relief: a jittered 3x3 tiling of compact anisotropic
# bumps, (amplitude, cx, cy, sx, sy) in normalized units.  Curvature
# everywhere in the frame maximizes the integrability signal; scenes with
# large flat regions lose the perspective cue to image noise much earlier.
DEFAULT_BUMPS = (
    (0.7513, -0.6257, -0.6535, 0.2246, 0.2012),
    (0.6458, -0.6541, 0.0599, 0.1927, 0.1636),
    (0.7131, -0.5431, 0.6477, 0.1788, 0.1948),
    (0.7611, 0.0212, -0.6527, 0.1914, 0.1994),
    (0.6889, -0.0523, 0.0215, 0.1817, 0.2304),
    (0.7675, 0.0447, 0.5422, 0.1782, 0.2316),
    (0.7269, 0.5924, -0.6356, 0.1601, 0.2003),
    (0.6312, 0.5579, 0.0238, 0.2245, 0.1853),
    (0.6621, 0.5784, 0.636, 0.2239, 0.1788),
)

# Compact three-bump variant: the smallest relief that still yields a
# full-rank integrability matrix.
THREE_BUMPS = (
    (0.30, -0.42, -0.30, 0.42, 0.34),
    (0.22, 0.45, 0.12, 0.30, 0.40),
    (0.26, -0.05, 0.45, 0.36, 0.28),
)


@dataclass
class DepthMap:
    """Positive depth samples with their camera context."""

    grid: PixelGrid
    camera: CameraModel

    def __post_init__(self):
        if self.grid.channels != 1:
            raise BadParamsError("depth grid must be single-channel")
        z = self.grid.values[self.grid.mask]
        if z.size and not (z > 0).all():
            raise NonPositiveDepthError("depth must be > 0 on the mask")


@dataclass
class NormalField:
    """Unit normals with n3 < 0 (pointing toward the camera).

    ``strict=False`` skips the per-pixel orientation check; estimator outputs
    on badly corrupted data keep only the mask-mean orientation.
    """

    grid: PixelGrid
    strict: bool = True

    def __post_init__(self):
        if self.grid.channels != 3:
            raise BadParamsError("normal grid must have 3 channels")
        n = self.grid.masked()
        if n.size == 0:
            return
        norms = np.linalg.norm(n, axis=1)
        if np.abs(norms - 1.0).max() > UNIT_NORM_TOL:
            raise BadParamsError("normals must have unit norm on the mask")
        if self.strict and not (n[:, 2] < 0).all():
            raise BadParamsError("normals must satisfy n3 < 0 on the mask")

    def twin(self) -> "NormalField":
        """Globally negate (n1, n2): the concave/convex counterpart."""
        values = self.grid.values.copy()
        values[..., 0] *= -1
        values[..., 1] *= -1
        return NormalField(PixelGrid(values, self.grid.mask.copy()), strict=self.strict)


@dataclass
class GradientField:
    """Per-pixel (d/du, d/dv) samples and the scheme that produced them."""

    grid: PixelGrid
    scheme: str = "central"

    def __post_init__(self):
        if self.grid.channels != 2:
            raise BadParamsError("gradient grid must have 2 channels")


def _shift(a: np.ndarray, step: int, axis: int, fill=0.0) -> np.ndarray:
    """Shift without wraparound; vacated entries receive ``fill``."""
    out = np.full_like(a, fill)
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    if step > 0:
        src[axis] = slice(None, -step)
        dst[axis] = slice(step, None)
    elif step < 0:
        src[axis] = slice(-step, None)
        dst[axis] = slice(None, step)
    else:
        return a.copy()
    out[tuple(dst)] = a[tuple(src)]
    return out


def _axis_derivative(values, mask, axis, scheme, boundary):
    """One directional derivative plus the validity mask of its stencil."""
    has_next = _shift(mask, -1, axis, False)
    has_prev = _shift(mask, 1, axis, False)
    nxt = _shift(values, -1, axis)
    prv = _shift(values, 1, axis)

    deriv = np.zeros_like(values)
    if scheme == "central":
        both = has_next & has_prev
        deriv = np.where(both, (nxt - prv) / 2.0, deriv)
        valid = both
        if boundary == "one_sided":
            fwd_only = has_next & ~has_prev
            bwd_only = has_prev & ~has_next
            deriv = np.where(fwd_only, nxt - values, deriv)
            deriv = np.where(bwd_only, values - prv, deriv)
            valid = has_next | has_prev
    elif scheme == "forward":
        deriv = np.where(has_next, nxt - values, deriv)
        valid = has_next
    else:
        raise BadParamsError(f"unknown scheme {scheme!r}")
    return deriv, valid & mask


def gradient(g: PixelGrid, scheme: str = "central", boundary: str = "erode") -> GradientField:
    """Finite-difference gradient of a scalar grid.

    ``boundary="erode"`` drops pixels whose stencil does not fit (the output
    mask shrinks); ``boundary="one_sided"`` falls back to forward/backward
    differences at the mask boundary instead.
    """
    if g.channels != 1:
        raise BadParamsError("gradient expects a single-channel grid")
    if boundary not in ("erode", "one_sided"):
        raise BadParamsError(f"unknown boundary mode {boundary!r}")
    g.require_nonempty()
    if g.rows < 3 or g.cols < 3:
        raise BadParamsError("grids must be at least 3x3 for derivatives")
    gu, ok_u = _axis_derivative(g.values, g.mask, 1, scheme, boundary)
    gv, ok_v = _axis_derivative(g.values, g.mask, 0, scheme, boundary)
    valid = ok_u & ok_v
    if not valid.any():
        raise EmptyDomainError("no pixel has a valid derivative stencil")
    values = np.stack([np.where(valid, gu, 0.0), np.where(valid, gv, 0.0)], axis=-1)
    return GradientField(PixelGrid(values, valid), scheme=scheme)


def channel_gradients(
    grid: PixelGrid, scheme: str = "central", boundary: str = "erode"
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of every channel at once: (du, dv, shared mask)."""
    values = grid.values if grid.values.ndim == 3 else grid.values[..., None]
    dus, dvs = [], []
    mask = None
    for c in range(values.shape[2]):
        gf = gradient(PixelGrid(values[..., c], grid.mask), scheme, boundary)
        dus.append(gf.grid.values[..., 0])
        dvs.append(gf.grid.values[..., 1])
        mask = gf.grid.mask if mask is None else mask  # identical for all channels
    return np.stack(dus, axis=-1), np.stack(dvs, axis=-1), mask


def _normalize_toward_camera(raw: np.ndarray, mask: np.ndarray, strict: bool = True) -> NormalField:
    norms = np.linalg.norm(raw, axis=-1)
    safe = np.where(norms > 0, norms, 1.0)
    n = raw / safe[..., None]
    flip = n[..., 2] > 0
    n[flip] *= -1.0
    n[~mask] = 0.0
    return NormalField(PixelGrid(n, mask), strict=strict)


def normals_orthographic(depth: DepthMap, scheme: str = "central") -> NormalField:
    """n = (z_u, z_v, -1) / |.| on the derivative mask."""
    depth.camera.require_orthographic()
    gf = gradient(depth.grid, scheme)
    zu = gf.grid.values[..., 0]
    zv = gf.grid.values[..., 1]
    raw = np.stack([zu, zv, -np.ones_like(zu)], axis=-1)
    return _normalize_toward_camera(raw, gf.grid.mask)


def normals_perspective(depth: DepthMap, scheme: str = "central") -> NormalField:
    """n proportional to (f*grad z, -z - [u,v]^T grad z), oriented with n3 < 0."""
    depth.camera.require_perspective()
    f = depth.camera.focal
    gf = gradient(depth.grid, scheme)
    mask = gf.grid.mask
    zu = gf.grid.values[..., 0]
    zv = gf.grid.values[..., 1]
    u, v = depth.camera.pixel_coords(depth.grid.rows, depth.grid.cols)
    third = -depth.grid.values - u * zu - v * zv
    raw = np.stack([f * zu, f * zv, third], axis=-1)
    raw[~mask] = 0.0
    return _normalize_toward_camera(raw, mask)


def log_depth_gradient(n: NormalField, camera: CameraModel) -> GradientField:
    """Gradient of log-depth implied by a perspective normal field.

    Returns (p, q) / (f - u p - v q) with p = -n1/n3, q = -n2/n3.  Pixels
    whose denominator falls below 1e-9 * f are dropped from the mask and
    reported with a warning.
    """
    camera.require_perspective()
    f = camera.focal
    mask = n.grid.mask.copy()
    vals = n.grid.values
    n3 = np.where(mask, vals[..., 2], -1.0)
    p = -vals[..., 0] / n3
    q = -vals[..., 1] / n3
    u, v = camera.pixel_coords(n.grid.rows, n.grid.cols)
    denom = f - u * p - v * q
    eps = 1e-9 * f
    bad = mask & (np.abs(denom) < eps)
    if bad.any():
        warnings.warn(f"log_depth_gradient: dropped {int(bad.sum())} pixels with singular denominator")
        mask &= ~bad
    if not mask.any():
        raise EmptyDomainError("all pixels had a singular denominator")
    denom = np.where(np.abs(denom) < eps, 1.0, denom)
    values = np.stack([p / denom, q / denom], axis=-1)
    values[~mask] = 0.0
    return GradientField(PixelGrid(values, mask), scheme="sampled")


def curl_residual(gf: GradientField, scheme: str = "central") -> PixelGrid:
    """Per-pixel d/dv of the u-component minus d/du of the v-component."""
    gf.grid.require_nonempty()
    p_grad = gradient(PixelGrid(gf.grid.values[..., 0], gf.grid.mask), scheme)
    q_grad = gradient(PixelGrid(gf.grid.values[..., 1], gf.grid.mask), scheme)
    mask = p_grad.grid.mask & q_grad.grid.mask
    if not mask.any():
        raise EmptyDomainError("no pixel admits cross derivatives")
    res = p_grad.grid.values[..., 1] - q_grad.grid.values[..., 0]
    res = np.where(mask, res, 0.0)
    return PixelGrid(res, mask)


# ---------------------------------------------------------------------------
# procedural shapes


def _norm_coords(rows, cols, camera):
    half = (min(rows, cols) - 1) / 2.0
    u, v = camera.pixel_coords(rows, cols)
    return u / half, v / half, half


def _require(cond, msg):
    if not cond:
        raise BadParamsError(msg)


def _bump_terms(params):
    bumps = params.get("bumps", [list(b) for b in DEFAULT_BUMPS])
    _require(bumps, "multi_bump requires a non-empty 'bumps' list")
    for b in bumps:
        _require(len(b) == 5, "each bump is (amplitude, cx, cy, sx, sy)")
        _require(b[3] > 0 and b[4] > 0, "bump widths must be positive")
    return bumps


def _zeta_and_grad(kind, params, x, y):
    """Normalized profile and its analytic gradient in normalized units."""
    z0 = params.get("z0", 4.0)
    _require(z0 > 0, "z0 must be positive")
    zeros = np.zeros_like(x)
    if kind == "plane":
        return z0 + zeros, zeros, zeros

    if kind in ("gaussian_bump", "multi_bump"):
        if kind == "gaussian_bump":
            cx, cy = params.get("center", (0.15, -0.1))
            sx, sy = params.get("sigma", (0.45, 0.32))
            _require(sx > 0 and sy > 0, "sigma must be positive")
            bumps = [(params.get("amplitude", 0.35), cx, cy, sx, sy)]
        else:
            bumps = _bump_terms(params)
        zeta = z0 + zeros
        gx, gy = zeros.copy(), zeros.copy()
        for a, cx, cy, sx, sy in bumps:
            e = np.exp(-((x - cx) ** 2 / (2 * sx**2) + (y - cy) ** 2 / (2 * sy**2)))
            zeta = zeta - a * e
            gx = gx + a * e * (x - cx) / sx**2
            gy = gy + a * e * (y - cy) / sy**2
        _require((zeta > 0).all(), "bump amplitudes exceed z0 somewhere")
        return zeta, gx, gy

    if kind in ("cylinder_u", "cylinder_v", "ridge_diag"):
        a = params.get("amplitude", 0.4)
        s = params.get("sigma", 0.35)
        c = params.get("center", 0.0)
        _require(s > 0, "sigma must be positive")
        if kind == "cylinder_u":
            t, tx, ty = y, 0.0, 1.0
        elif kind == "cylinder_v":
            t, tx, ty = x, 1.0, 0.0
        else:
            orient = params.get("orientation", 1)
            _require(orient in (1, -1), "orientation must be +1 or -1")
            t = (x + orient * y) / np.sqrt(2.0)
            tx, ty = 1 / np.sqrt(2.0), orient / np.sqrt(2.0)
        e = np.exp(-((t - c) ** 2) / (2 * s**2))
        zeta = z0 - a * e
        g = a * e * (t - c) / s**2
        _require((zeta > 0).all(), "amplitude exceeds z0")
        return zeta, g * tx, g * ty

    raise BadParamsError(f"unknown shape kind {kind!r}")


def _sphere_monge(params, x, y, half, camera):
    """Sphere-cap depth and its analytic pixel-space gradient (z, z_u, z_v).

    The default parameters add a gentle Gaussian modulation on top of the
    exact sphere: a perfect sphere has an affine unit-normal field, which
    makes it a *degenerate* scene for the integrability analysis beyond the
    simple catalogued patterns; the modulation restores full rank while
    keeping the surface smooth.  Pass ``dimple_amp=0`` for the exact sphere.
    """
    z0 = params.get("z0", 4.0)
    rho = params.get("radius", 2.6)
    cx, cy = params.get("center", (0.2, -0.15))
    _require(z0 > 0 and rho > 0, "sphere requires positive z0 and radius")
    depth_scale = z0 * half
    if camera.is_perspective:
        phi = camera.focal / half
        lateral = depth_scale / phi
        center = np.array([cx * lateral, cy * lateral, depth_scale])
        radius = rho * lateral
        # ray through pixel (u, v): P(t) = t * (u/f, v/f, 1)
        f = camera.focal
        du, dv = x * half / f, y * half / f
        a = du**2 + dv**2 + 1.0
        b = -2.0 * (du * center[0] + dv * center[1] + center[2])
        c = center @ center - radius**2
        disc = b**2 - 4 * a * c
        _require((disc > 0).all(), "sphere does not cover the whole grid")
        sq = np.sqrt(disc)
        z = (-b - sq) / (2 * a)
        _require((z > 0).all(), "sphere intersections behind the camera")
        a_u, a_v = 2 * du / f, 2 * dv / f
        b_u, b_v = -2 * center[0] / f, -2 * center[1] / f
        disc_u = 2 * b * b_u - 4 * c * a_u
        disc_v = 2 * b * b_v - 4 * c * a_v
        zu = (-b_u - disc_u / (2 * sq)) / (2 * a) - z * a_u / a
        zv = (-b_v - disc_v / (2 * sq)) / (2 * a) - z * a_v / a
    else:
        center = np.array([cx * half, cy * half, depth_scale])
        radius = rho * half
        u, v = x * half, y * half
        r2 = (u - center[0]) ** 2 + (v - center[1]) ** 2
        _require((r2 < radius**2).all(), "sphere does not cover the whole grid")
        root = np.sqrt(radius**2 - r2)
        z = center[2] - root
        zu = (u - center[0]) / root
        zv = (v - center[1]) / root

    amp = params.get("dimple_amp", 0.08)
    if amp != 0:
        dcx, dcy = params.get("dimple_center", (-0.25, 0.3))
        ds = params.get("dimple_sigma", 0.5)
        _require(ds > 0, "dimple_sigma must be positive")
        e = np.exp(-((x - dcx) ** 2 + (y - dcy) ** 2) / (2 * ds**2))
        z = z - half * amp * e
        # d/du = (1/half) d/dx
        zu = zu + amp * e * (x - dcx) / ds**2
        zv = zv + amp * e * (y - dcy) / ds**2
    _require((z > 0).all(), "sphere-cap depth not positive everywhere")
    return z, zu, zv


def synth_depth(kind: str, params: dict | None, size, camera: CameraModel) -> DepthMap:
    """Generate a smooth positive synthetic depth map.

    ``size`` is an int (square grid) or a (rows, cols) pair.  Parameters are
    expressed in normalized grid units; see the module docstring.
    """
    params = dict(params or {})
    rows, cols = (size, size) if np.isscalar(size) else size
    _require(rows >= 3 and cols >= 3, "grid must be at least 3x3")
    x, y, half = _norm_coords(rows, cols, camera)
    if kind == "sphere_cap":
        z, _, _ = _sphere_monge(params, x, y, half, camera)
    else:
        zeta, _, _ = _zeta_and_grad(kind, params, x, y)
        z = half * zeta
    mask = np.ones((rows, cols), dtype=bool)
    return DepthMap(PixelGrid(z, mask), camera)


def synth_normals_analytic(kind: str, params: dict | None, size, camera: CameraModel) -> NormalField:
    """Closed-form ground-truth normals for the synthetic shapes.

    Uses the analytic gradient of the generating profile (a true sphere
    normal for ``sphere_cap``), so the result carries no discretization
    error; the mask is the full grid.
    """
    params = dict(params or {})
    rows, cols = (size, size) if np.isscalar(size) else size
    x, y, half = _norm_coords(rows, cols, camera)
    mask = np.ones((rows, cols), dtype=bool)
    if kind == "sphere_cap":
        z, zu, zv = _sphere_monge(params, x, y, half, camera)
    else:
        zeta, gx, gy = _zeta_and_grad(kind, params, x, y)
        z = half * zeta
        # d z / d u = d(half * zeta) / d(half * x) = d zeta / d x
        zu = np.broadcast_to(gx, x.shape).astype(float)
        zv = np.broadcast_to(gy, x.shape).astype(float)
    if camera.is_perspective:
        f = camera.focal
        u, v = x * half, y * half
        third = -z - u * zu - v * zv
        raw = np.stack([f * zu, f * zv, third], axis=-1)
    else:
        raw = np.stack([zu, zv, -np.ones_like(zu)], axis=-1)
    return _normalize_toward_camera(raw, mask)
