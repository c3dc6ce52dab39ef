"""Uncalibrated photometric stereo under first-order spherical-harmonics lighting.

Synthetic data generation, the scaled-Lorentz ambiguity algebra,
integrability-based disambiguation, and the closed-form perspective solver,
with an evaluation harness.
"""

from . import errors
from .estimator import CalibratedDirectionalPS, UncalibratedPerspectivePS
from .geometry import (
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
from .grid import CameraModel, PixelGrid
from .harness import (
    DatasetManifest,
    EvalResult,
    generate_dataset,
    load_dataset,
    make_albedo,
    mean_angular_error,
    resolve_ortho_twin,
    run_noise_sweep,
    run_theorem2_experiment,
)
from .integrability import (
    CDerivedFields,
    IntegrabilityMatrix,
    build_ortho_matrix,
    build_persp_matrix,
    c_fields,
    degeneracy_report,
    ortho_residual,
    persp_residual_m3,
    persp_residual_m4,
)
from .lorentz import (
    GBRParams,
    ScaledLorentz,
    boost_eigencheck,
    classify,
    decompose,
    is_scaled_gbr,
    lower_submatrix,
    make_gbr,
    minor2,
    realize,
)
from .shading import (
    AlbedoMap,
    ImageStack,
    MField,
    add_gaussian_noise,
    build_mfield,
    render_directional,
    render_sh1,
    sample_sh1_lighting,
    solve_calibrated_directional,
    transform_mfield,
)
from .solver import (
    AmbiguityRecovery,
    Factorization,
    MinorSolution,
    ReconstructionReport,
    enforce_sh1_constraint,
    extract_surface,
    factorize_rank4,
    recover_ambiguity,
    solve_minor_system,
    solve_ups_perspective,
)

__version__ = "0.1.0"
