import numpy as np
import pytest

from ups.grid import CameraModel, PixelGrid
from ups.geometry import normals_orthographic, normals_perspective, synth_depth
from ups.harness import GENTLE_MULTI_BUMP, make_albedo
from ups.shading import build_mfield


def full_mask(rows, cols=None):
    return np.ones((rows, cols or rows), dtype=bool)


def gentle_scene(size=96, focal=450.0, albedo_kind="white", albedo_seed=0):
    """Smooth perspective multi-bump scene: (mfield, normals, albedo, camera)."""
    cam = CameraModel.perspective(focal)
    normals = normals_perspective(synth_depth("multi_bump", GENTLE_MULTI_BUMP, size, cam))
    albedo = make_albedo(albedo_kind, normals.grid.mask, albedo_seed)
    return build_mfield(albedo, normals), normals, albedo, cam


def gentle_scene_ortho(size=96, albedo_kind="white", albedo_seed=0):
    cam = CameraModel.orthographic()
    normals = normals_orthographic(synth_depth("multi_bump", GENTLE_MULTI_BUMP, size, cam))
    albedo = make_albedo(albedo_kind, normals.grid.mask, albedo_seed)
    return build_mfield(albedo, normals), normals, albedo, cam


@pytest.fixture(scope="session")
def persp_scene_96():
    return gentle_scene(96)


@pytest.fixture(scope="session")
def ortho_scene_96():
    return gentle_scene_ortho(96)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
