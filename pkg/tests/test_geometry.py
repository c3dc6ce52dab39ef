import numpy as np
import pytest

from ups.errors import (
    BadParamsError,
    EmptyDomainError,
    NonPositiveDepthError,
    WrongProjectionError,
)
from ups.geometry import (
    SHAPE_KINDS,
    THREE_BUMPS,
    DepthMap,
    GradientField,
    NormalField,
    curl_residual,
    gradient,
    log_depth_gradient,
    normals_orthographic,
    normals_perspective,
    synth_depth,
    synth_normals_analytic,
)
from ups.grid import CameraModel, PixelGrid

from conftest import full_mask


def coords(n):
    u = np.arange(n, dtype=float) - (n - 1) / 2
    return np.meshgrid(u, u)  # U varies along columns by meshgrid default


def test_gradient_constant_is_zero():
    g = PixelGrid(np.full((8, 8), 3.7), full_mask(8))
    gf = gradient(g)
    assert np.abs(gf.grid.values[gf.grid.mask]).max() == 0.0


def test_gradient_forward_on_ramp():
    U, V = coords(8)
    gf = gradient(PixelGrid(U, full_mask(8)), scheme="forward")
    inner = gf.grid.mask
    assert np.allclose(gf.grid.values[inner][:, 0], 1.0)
    assert np.allclose(gf.grid.values[inner][:, 1], 0.0)
    # forward scheme cannot serve the last column/row
    assert not gf.grid.mask[:, -1].any()


def test_gradient_central_bilinear_exact():
    # g = u*v has exact central differences: g_u = v, g_v = u
    U, V = coords(16)
    gf = gradient(PixelGrid(U * V, full_mask(16)))
    m = gf.grid.mask
    assert np.abs(gf.grid.values[..., 0][m] - V[m]).max() < 1e-12
    assert np.abs(gf.grid.values[..., 1][m] - U[m]).max() < 1e-12


def test_gradient_one_sided_boundary_mode():
    U, V = coords(8)
    gf = gradient(PixelGrid(U * V, full_mask(8)), boundary="one_sided")
    # no erosion with the fallback; bilinear stays exact even one-sided
    assert gf.grid.mask.all()
    assert np.abs(gf.grid.values[..., 0] - V).max() < 1e-12


def test_gradient_empty_stencil_raises():
    mask = np.zeros((5, 5), dtype=bool)
    mask[::2, ::2] = True  # isolated pixels only
    with pytest.raises(EmptyDomainError):
        gradient(PixelGrid(np.ones((5, 5)), mask))


def test_gradient_needs_3x3():
    with pytest.raises(BadParamsError):
        gradient(PixelGrid(np.ones((2, 5)), full_mask(2, 5)))


def test_normals_orthographic_plane_and_ramp():
    cam = CameraModel.orthographic()
    n = normals_orthographic(DepthMap(PixelGrid(np.full((8, 8), 5.0), full_mask(8)), cam))
    assert np.allclose(n.grid.masked(), [0.0, 0.0, -1.0])

    U, _ = coords(8)
    n = normals_orthographic(DepthMap(PixelGrid(U + 10.0, full_mask(8)), cam))
    expect = np.array([1.0, 0.0, -1.0]) / np.sqrt(2)
    assert np.abs(n.grid.masked() - expect).max() < 1e-12


def test_normals_orthographic_bump_vs_analytic():
    cam = CameraModel.orthographic()
    params = {"z0": 4.0, "amplitude": 0.3, "center": (0.1, -0.2), "sigma": (0.5, 0.4)}
    errs = []
    for size in (32, 64):
        n_fd = normals_orthographic(synth_depth("gaussian_bump", params, size, cam))
        n_an = synth_normals_analytic("gaussian_bump", params, size, cam)
        m = n_fd.grid.mask
        dots = np.clip((n_fd.grid.values * n_an.grid.values).sum(-1)[m], -1, 1)
        errs.append(np.degrees(np.arccos(dots)).max())
    assert errs[0] < 1.0
    assert errs[1] < errs[0] / 2.5  # second-order scheme


def test_normals_wrong_projection():
    cam_p = CameraModel.perspective(600.0)
    depth = synth_depth("plane", None, 16, cam_p)
    with pytest.raises(WrongProjectionError):
        normals_orthographic(depth)
    cam_o = CameraModel.orthographic()
    with pytest.raises(WrongProjectionError):
        normals_perspective(synth_depth("plane", None, 16, cam_o))


def test_depth_positivity_enforced():
    with pytest.raises(NonPositiveDepthError):
        DepthMap(PixelGrid(np.zeros((8, 8)), full_mask(8)), CameraModel.orthographic())


def test_normals_perspective_flat_plane():
    cam = CameraModel.perspective(600.0)
    n = normals_perspective(DepthMap(PixelGrid(np.full((8, 8), 7.0), full_mask(8)), cam))
    assert np.abs(n.grid.masked() - [0.0, 0.0, -1.0]).max() < 1e-12


def test_normals_perspective_sphere_oracle():
    # exact sphere: recovered normals match the geometric sphere normals
    cam = CameraModel.perspective(600.0)
    params = {"z0": 4.0, "radius": 2.6, "center": (0.2, -0.15), "dimple_amp": 0.0}
    n_fd = normals_perspective(synth_depth("sphere_cap", params, 64, cam))
    n_an = synth_normals_analytic("sphere_cap", params, 64, cam)
    m = n_fd.grid.mask
    dots = np.clip((n_fd.grid.values * n_an.grid.values).sum(-1)[m], -1, 1)
    mae = np.degrees(np.arccos(dots)).mean()
    assert mae < 0.5


def test_normals_perspective_exponential_cylinder():
    # z = c * exp(a u / f) has normals constant along v
    f, n = 600.0, 32
    cam = CameraModel.perspective(f)
    U, V = coords(n)
    z = 50 * np.exp(0.8 * U / f)
    nf = normals_perspective(DepthMap(PixelGrid(z, full_mask(n)), cam))
    vals = nf.grid.values[nf.grid.mask].reshape(n - 2, n - 2, 3)
    assert np.abs(vals - vals[:1]).max() < 1e-9


def test_log_depth_gradient_flat():
    cam = CameraModel.perspective(600.0)
    vals = np.zeros((8, 8, 3))
    vals[..., 2] = -1.0
    gf = log_depth_gradient(NormalField(PixelGrid(vals, full_mask(8))), cam)
    assert np.abs(gf.grid.values[gf.grid.mask]).max() == 0.0


def test_log_depth_gradient_exponential():
    f, n = 600.0, 32
    cam = CameraModel.perspective(f)
    U, _ = coords(n)
    z = 50 * np.exp(U / f)
    nf = normals_perspective(DepthMap(PixelGrid(z, full_mask(n)), cam))
    gf = log_depth_gradient(nf, cam)
    m = gf.grid.mask
    assert np.abs(gf.grid.values[..., 0][m] - 1 / f).max() < 1e-8
    assert np.abs(gf.grid.values[..., 1][m]).max() < 1e-12


def test_log_depth_gradient_round_trip():
    # matches finite differences of log z, improving under refinement
    errs = []
    for size in (48, 96):
        cam = CameraModel.perspective(600.0 * size / 128)
        depth = synth_depth("multi_bump", None, size, cam)
        nf = normals_perspective(depth)
        ld = log_depth_gradient(nf, cam)
        gl = gradient(PixelGrid(np.log(depth.grid.values), depth.grid.mask))
        m = ld.grid.mask & gl.grid.mask
        errs.append(np.abs(ld.grid.values - gl.grid.values)[m].max())
    assert errs[1] < errs[0] / 1.8


def test_log_depth_gradient_singular_denominator_reported():
    # p = f/2 zeroes the denominator exactly on the u = 2 pixel column
    f, n = 10.0, 9
    cam = CameraModel.perspective(f)
    vals = np.zeros((n, n, 3))
    norm = np.sqrt(1 + (f / 2) ** 2)
    vals[..., 0] = (f / 2) / norm
    vals[..., 2] = -1 / norm
    with pytest.warns(UserWarning, match="singular denominator"):
        gf = log_depth_gradient(NormalField(PixelGrid(vals, full_mask(n))), cam)
    assert gf.grid.mask.sum() == n * n - n


def test_curl_residual_rotation_and_zero():
    # (p, q) = (-v, u): d/dv(p) - d/du(q) = -2 everywhere (unit pitch)
    U, V = coords(16)
    rot = GradientField(PixelGrid(np.stack([-V, U], -1), full_mask(16)))
    res = curl_residual(rot)
    assert np.allclose(res.values[res.mask], -2.0)
    assert np.allclose(np.abs(res.values[res.mask]), 2.0)
    zero = GradientField(PixelGrid(np.zeros((16, 16, 2)), full_mask(16)))
    res = curl_residual(zero)
    assert np.abs(res.values[res.mask]).max() == 0.0


def test_curl_of_discrete_gradient_is_exactly_zero():
    # central-difference operators commute, so the discrete curl vanishes
    cam = CameraModel.orthographic()
    for size in (32, 64):
        depth = synth_depth("multi_bump", None, size, cam)
        res = curl_residual(gradient(depth.grid))
        assert np.abs(res.values[res.mask]).max() == 0.0


def test_curl_of_sampled_gradient_converges():
    # sampled analytic gradients carry an O(h^2) curl under refinement
    cam = CameraModel.orthographic()
    errs = []
    for size in (32, 64, 128):
        n = synth_normals_analytic("multi_bump", None, size, cam)
        p = -n.grid.values[..., 0] / n.grid.values[..., 2]
        q = -n.grid.values[..., 1] / n.grid.values[..., 2]
        gf = GradientField(PixelGrid(np.stack([p, q], -1), n.grid.mask))
        res = curl_residual(gf)
        errs.append(np.abs(res.values[res.mask]).max())
    assert errs[1] < errs[0] / 1.8
    assert errs[2] < errs[1] / 1.8


def test_log_depth_and_depth_curl_converge_together():
    # integrability of z and of log z are equivalent: both sampled-gradient
    # curls vanish under refinement; grad z = z * grad log z pointwise
    pairs = []
    for size in (32, 64, 128):
        camN = CameraModel.perspective(600.0 * size / 128)
        depth = synth_depth("multi_bump", None, size, camN)
        ld = log_depth_gradient(normals_perspective(depth), camN)
        curl_log = curl_residual(ld)
        grad_z = ld.grid.values * depth.grid.values[..., None]
        curl_z = curl_residual(GradientField(PixelGrid(grad_z, ld.grid.mask)))
        a = np.abs(curl_log.values[curl_log.mask]).max()
        # depth magnitudes grow with the grid; compare the curl relative to z
        b = np.abs(curl_z.values[curl_z.mask]).max() / depth.grid.values.mean()
        pairs.append((a, b))
    for (a1, b1), (a2, b2) in zip(pairs, pairs[1:]):
        assert a2 < a1 / 1.5
        assert b2 < b1 / 1.5


def test_curl_residual_nonintegrable_stays():
    # pure rotation field is far from any gradient at every resolution
    for size in (32, 64):
        U, V = coords(size)
        res = curl_residual(GradientField(PixelGrid(np.stack([-V, U], -1), full_mask(size))))
        assert np.abs(res.values[res.mask]).max() > 1.9


def test_synth_plane_constant():
    d = synth_depth("plane", {"z0": 2.5}, 16, CameraModel.orthographic())
    assert np.ptp(d.grid.values) == 0.0


def test_synth_cylinder_u_has_no_u_variation():
    cam = CameraModel.perspective(600.0)
    n = normals_perspective(synth_depth("cylinder_u", None, 32, cam))
    vals = n.grid.values[n.grid.mask].reshape(30, 30, 3)
    assert np.abs(np.diff(vals, axis=1)).max() < 1e-12


def test_synth_invariants_all_kinds():
    for cam in (CameraModel.orthographic(), CameraModel.perspective(600.0)):
        for kind in SHAPE_KINDS:
            depth = synth_depth(kind, None, 32, cam)
            assert (depth.grid.values > 0).all()
            n = normals_perspective(depth) if cam.is_perspective else normals_orthographic(depth)
            vals = n.grid.masked()
            assert np.abs(np.linalg.norm(vals, axis=1) - 1).max() < 1e-12
            assert (vals[:, 2] < 0).all()
            n_an = synth_normals_analytic(kind, None, 32, cam)
            vals = n_an.grid.masked()
            assert np.abs(np.linalg.norm(vals, axis=1) - 1).max() < 1e-12
            assert (vals[:, 2] < 0).all()


def test_synth_bad_params():
    cam = CameraModel.orthographic()
    with pytest.raises(BadParamsError):
        synth_depth("no_such_shape", None, 16, cam)
    with pytest.raises(BadParamsError):
        synth_depth("gaussian_bump", {"amplitude": 9.0}, 16, cam)  # depth <= 0
    with pytest.raises(BadParamsError):
        synth_depth("gaussian_bump", {"sigma": (0.0, 0.3)}, 16, cam)
    with pytest.raises(BadParamsError):
        synth_depth("sphere_cap", {"radius": 0.5}, 16, cam)  # does not cover grid
    with pytest.raises(BadParamsError):
        synth_depth("ridge_diag", {"orientation": 2}, 16, cam)


def test_perspective_approaches_orthographic_at_long_focal():
    # mean depth equal to the focal length, relief small against it
    size = 48
    f = 600.0 * 1000
    half = (size - 1) / 2
    cam = CameraModel.perspective(f)
    params = {"z0": f / half, "amplitude": 0.25, "center": (0.1, -0.1), "sigma": (0.4, 0.5)}
    depth = synth_depth("gaussian_bump", params, size, cam)
    n_p = normals_perspective(depth)
    n_o = normals_orthographic(DepthMap(depth.grid, CameraModel.orthographic()))
    m = n_p.grid.mask & n_o.grid.mask
    dots = np.clip((n_p.grid.values * n_o.grid.values).sum(-1)[m], -1, 1)
    assert np.degrees(np.arccos(dots)).max() < 0.1


def test_normal_field_validation():
    vals = np.zeros((4, 4, 3))
    vals[..., 2] = -1.0
    NormalField(PixelGrid(vals, full_mask(4)))  # fine
    bad = vals.copy()
    bad[1, 1, 2] = 1.0
    with pytest.raises(BadParamsError):
        NormalField(PixelGrid(bad, full_mask(4)))
    NormalField(PixelGrid(bad, full_mask(4)), strict=False)  # orientation relaxed
    with pytest.raises(BadParamsError):
        NormalField(PixelGrid(vals * 2.0, full_mask(4)))  # not unit
