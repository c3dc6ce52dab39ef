import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from ups.errors import BadParamsError, DimensionMismatchError
from ups.estimator import CalibratedDirectionalPS, UncalibratedPerspectivePS
from ups.harness import make_albedo, mean_angular_error
from ups.geometry import NormalField
from ups.grid import PixelGrid
from ups.shading import render_directional, render_sh1, sample_sh1_lighting
from ups.validation import check_images_array, check_mask, stack_from_array

from conftest import gentle_scene


@pytest.fixture(scope="module")
def image_array():
    mf, normals, _, cam = gentle_scene(64, 300.0)
    L = sample_sh1_lighting(12, 7)
    stack = render_sh1(mf, L)
    rows, cols = stack.mask.shape
    X = np.zeros((12, rows, cols))
    X[:, stack.mask] = stack.images
    return X, stack.mask, normals, cam


def test_estimator_fit_and_attributes(image_array):
    X, mask, normals, cam = image_array
    est = UncalibratedPerspectivePS(focal=cam.focal).fit(X, mask=mask)
    assert est.normals_.shape == mask.shape + (3,)
    assert est.albedo_.shape == mask.shape
    assert est.diagnostics_["sh1_residual"] < 1e-8
    got = NormalField(PixelGrid(est.normals_, mask), strict=False)
    assert mean_angular_error(got, normals).mae_degrees < 5.0
    assert est.predict() is est.normals_


def test_estimator_sklearn_protocol(image_array):
    est = UncalibratedPerspectivePS(focal=123.0, scheme="central")
    params = est.get_params()
    assert params["focal"] == 123.0
    cloned = clone(est)
    assert cloned.get_params() == params
    with pytest.raises(NotFittedError):
        cloned.predict()
    est.set_params(focal=456.0)
    assert est.focal == 456.0


def test_estimator_rejects_bad_input():
    with pytest.raises(DimensionMismatchError):
        UncalibratedPerspectivePS().fit(np.ones((4, 4)))
    with pytest.raises(BadParamsError):
        UncalibratedPerspectivePS().fit(np.full((4, 3, 3), np.nan))


def test_calibrated_estimator(image_array):
    X, mask, normals, _ = image_array
    rng = np.random.default_rng(1)
    L3 = rng.normal(size=(6, 3))
    rho = make_albedo("blobs", normals.grid.mask, 2)
    stack = render_directional(rho, normals, L3)
    rows, cols = mask.shape
    Xd = np.zeros((6, rows, cols))
    Xd[:, mask] = stack.images
    est = CalibratedDirectionalPS(lights=L3).fit(Xd, mask=mask)
    got = NormalField(PixelGrid(est.normals_, mask), strict=False)
    assert mean_angular_error(got, normals).mae_degrees < 1e-6
    with pytest.raises(ValueError):
        CalibratedDirectionalPS().fit(Xd, mask=mask)


def test_validation_helpers():
    X = check_images_array(np.ones((2, 4, 5)))
    assert X.dtype == np.float64
    mask = check_mask(None, 4, 5)
    assert mask.all()
    with pytest.raises(DimensionMismatchError):
        check_mask(np.ones((3, 3), bool), 4, 5)
    with pytest.raises(BadParamsError):
        check_mask(np.zeros((4, 5), bool), 4, 5)
    stack = stack_from_array(np.ones((2, 4, 5)))
    assert stack.n_pixels == 20
