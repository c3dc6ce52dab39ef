"""Scikit-learn style estimators over the functional solvers.

Both estimators consume an ``(m, rows, cols)`` image array (plus an optional
boolean mask) and expose the recovered fields as fitted attributes, so they
compose with sklearn tooling (``get_params`` / ``set_params`` / ``clone``).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .grid import CameraModel
from .shading import solve_calibrated_directional
from .solver import solve_ups_perspective
from .validation import stack_from_array


class UncalibratedPerspectivePS(BaseEstimator):
    """Closed-form uncalibrated photometric stereo under SH1 lighting.

    Parameters
    ----------
    focal : float
        Focal length in pixels of the calibrated perspective camera.
    principal_point : tuple or None
        (u0, v0) in pixel coordinates; image center when None.
    scheme : str
        Finite-difference scheme for the integrability matrix.
    degeneracy_threshold : float
        Relative singular-value threshold flagging degenerate surfaces.
    """

    def __init__(
        self,
        focal: float = 600.0,
        principal_point=None,
        scheme: str = "central",
        degeneracy_threshold: float = 1e-8,
    ):
        self.focal = focal
        self.principal_point = principal_point
        self.scheme = scheme
        self.degeneracy_threshold = degeneracy_threshold

    def fit(self, X, y=None, mask=None):
        stack = stack_from_array(X, mask)
        camera = CameraModel.perspective(self.focal, self.principal_point)
        report = solve_ups_perspective(
            stack,
            camera,
            scheme=self.scheme,
            degeneracy_threshold=self.degeneracy_threshold,
        )
        self.report_ = report
        self.normals_ = report.normals.grid.values.copy()
        self.albedo_ = report.albedo.grid.values.copy()
        self.mask_ = stack.mask.copy()
        self.diagnostics_ = dict(report.diagnostics)
        return self

    def _check_fitted(self):
        if not hasattr(self, "normals_"):
            raise NotFittedError("call fit first")

    def predict(self, X=None):
        """Return the fitted (rows, cols, 3) normal map."""
        self._check_fitted()
        return self.normals_


class CalibratedDirectionalPS(BaseEstimator):
    """Classic per-pixel least-squares photometric stereo with known lights."""

    def __init__(self, lights=None):
        self.lights = lights

    def fit(self, X, y=None, mask=None):
        if self.lights is None:
            raise ValueError("lights must be provided")
        stack = stack_from_array(X, mask)
        albedo, normals = solve_calibrated_directional(stack, np.asarray(self.lights))
        self.normals_ = normals.grid.values.copy()
        self.albedo_ = albedo.grid.values.copy()
        self.mask_ = stack.mask.copy()
        return self

    def predict(self, X=None):
        if not hasattr(self, "normals_"):
            raise NotFittedError("call fit first")
        return self.normals_
