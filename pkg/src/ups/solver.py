"""Closed-form solver for uncalibrated perspective photometric stereo.

Pipeline: rank-4 factorization of the image matrix, quadric-constraint
enforcement, null vector of the perspective integrability matrix, minor-based
recovery of the remaining ambiguity rows, and surface extraction.  Every stage
is deterministic: SVD sign conventions are pinned and the output scale/sign is
canonicalized (max albedo 1, mean n3 < 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadParamsError,
    BadSignatureError,
    DegenerateSurfaceError,
    IllConditionedLSError,
    RankDeficientImagesError,
    SingularDeltaError,
    TooFewPixelsError,
    UpsError,
    ZeroColumnError,
)
from .geometry import NormalField
from .grid import CameraModel, PixelGrid
from .integrability import (
    DEGENERACY_THRESHOLD,
    build_persp_matrix,
    c_fields,
    degeneracy_report,
)
from .shading import AlbedoMap, ImageStack

RANK4_SV_RATIO = 1e-10
DELTA_SV_RATIO = 1e-12
MAX_LS_COND = 1e10
ZERO_COLUMN_RATIO = 1e-14
W_SIGN_FLOOR = 1e-6

# order of the 10 independent entries of a symmetric 4x4 form
_SYM_IDX = [(0, 0), (1, 1), (2, 2), (3, 3), (0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


@dataclass
class Factorization:
    """Rank-4 split I ~ L1 @ M1 plus conditioning diagnostics."""

    L1: np.ndarray
    M1: np.ndarray
    mask: np.ndarray
    sh1_residual: float
    rank_gap: float
    singular_values: np.ndarray


@dataclass
class MinorSolution:
    """Unit null vector of the integrability matrix: the scaled 2x2 minors."""

    w: np.ndarray
    second_sv_ratio: float
    singular_values: np.ndarray


@dataclass
class AmbiguityRecovery:
    Delta: np.ndarray
    Q_scaled: np.ndarray
    v_hat: np.ndarray
    vQ: np.ndarray
    ls_residual: float


@dataclass
class ReconstructionReport:
    albedo: AlbedoMap
    normals: NormalField
    diagnostics: dict = field(default_factory=dict)


def _sh1_violation(M: np.ndarray) -> float:
    """Max per-column relative violation of c1^2 = c2^2 + c3^2 + c4^2."""
    quad = -M[0] ** 2 + (M[1:] ** 2).sum(axis=0)
    norms = (M**2).sum(axis=0)
    norms = np.where(norms > 0, norms, 1.0)
    return float(np.abs(quad / norms).max())


def _canonical_svd(X: np.ndarray):
    """Economy SVD with each right singular vector's largest entry positive."""
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    for k in range(Vt.shape[0]):
        j = int(np.argmax(np.abs(Vt[k])))
        if Vt[k, j] < 0:
            Vt[k] = -Vt[k]
            U[:, k] = -U[:, k]
    return U, s, Vt


def factorize_rank4(I: ImageStack) -> Factorization:
    """Truncated SVD split: L1 = U4 sqrt(S4), M1 = sqrt(S4) V4^T."""
    if I.m_images < 4 or I.n_pixels < 4:
        raise RankDeficientImagesError("need at least 4 images and 4 pixels")
    U, s, Vt = _canonical_svd(I.images)
    if s[0] == 0 or s[3] / s[0] < RANK4_SV_RATIO:
        raise RankDeficientImagesError(
            f"sigma4/sigma1 = {0 if s[0] == 0 else s[3] / s[0]:.3e}: image matrix is not rank 4"
        )
    rank_gap = float(s[3] / s[4]) if s.size > 4 and s[4] > 0 else np.inf
    root = np.sqrt(s[:4])
    L1 = U[:, :4] * root
    M1 = root[:, None] * Vt[:4]
    return Factorization(L1, M1, I.mask.copy(), _sh1_violation(M1), rank_gap, s)


def enforce_sh1_constraint(f: Factorization) -> Factorization:
    """Restore the m-field quadric, leaving only a scaled-Lorentz ambiguity.

    Fits the symmetric form S minimizing sum_j (m_j^T S m_j)^2 over unit
    Frobenius norm (smallest singular vector over the 10-dim symmetric
    space), requires eigenvalue signature {-,+,+,+} up to a global sign, and
    maps the factorization through B = sqrt(|D|) E^T with the negative
    direction first.
    """
    M = f.M1
    D = np.empty((M.shape[1], 10))
    for col, (i, j) in enumerate(_SYM_IDX):
        D[:, col] = M[i] * M[j] if i == j else 2.0 * M[i] * M[j]
    norms = np.linalg.norm(D, axis=1, keepdims=True)
    D = np.divide(D, norms, out=np.zeros_like(D), where=norms > 0)
    _, _, Vt = _canonical_svd(D)
    s_vec = Vt[-1]
    S = np.zeros((4, 4))
    for col, (i, j) in enumerate(_SYM_IDX):
        S[i, j] = s_vec[col]
        S[j, i] = s_vec[col]
    eigvals, eigvecs = np.linalg.eigh(S)
    if (eigvals < 0).sum() == 3 and (eigvals > 0).sum() == 1:
        eigvals, eigvecs = np.linalg.eigh(-S)
    if not ((eigvals < 0).sum() == 1 and (eigvals > 0).sum() == 3):
        raise BadSignatureError(
            f"quadratic form signature is not (1, 3): eigenvalues {eigvals}"
        )
    for k in range(4):
        j = int(np.argmax(np.abs(eigvecs[:, k])))
        if eigvecs[j, k] < 0:
            eigvecs[:, k] = -eigvecs[:, k]
    B = np.sqrt(np.abs(eigvals))[:, None] * eigvecs.T
    M1 = B @ f.M1
    L1 = f.L1 @ np.linalg.inv(B)
    return Factorization(L1, M1, f.mask.copy(), _sh1_violation(M1), f.rank_gap, f.singular_values)


def solve_minor_system(
    m1,
    camera: CameraModel,
    scheme: str = "central",
    degeneracy_threshold: float = DEGENERACY_THRESHOLD,
) -> MinorSolution:
    """Null vector of the perspective integrability matrix built from M1."""
    cf = c_fields(m1, scheme)
    if cf.n_pixels < 18:
        raise TooFewPixelsError("perspective system needs at least 18 pixels")
    im = build_persp_matrix(cf, camera)
    report = degeneracy_report(im, degeneracy_threshold)
    if report.degenerate:
        raise DegenerateSurfaceError(
            f"integrability matrix condition ratio {report.condition_ratio:.3e}"
            f" (pattern: {report.matched_pattern})"
        )
    _, s, Vt = np.linalg.svd(im.data, full_matrices=False)
    w = Vt[-1]
    lead = np.flatnonzero(np.abs(w) > W_SIGN_FLOOR)
    if lead.size and w[lead[0]] < 0:
        w = -w
    ratio = float(s[-2] / s[-1]) if s[-1] > 0 else np.inf
    return MinorSolution(w, ratio, s)


def recover_ambiguity(sol: MinorSolution) -> AmbiguityRecovery:
    """Closed-form (v | Q), up to scale, from the 18 scaled minors."""
    w = np.asarray(sol.w if isinstance(sol, MinorSolution) else sol, dtype=float)
    if w.shape != (18,):
        raise BadParamsError("expected an 18-entry minor vector")
    W = np.array(
        [
            [w[17], -w[11], w[5]],
            [-w[16], w[10], -w[4]],
            [w[15], -w[9], w[3]],
        ]
    )
    sw = np.linalg.svd(W, compute_uv=False)
    if sw[0] == 0 or sw[2] / sw[0] < DELTA_SV_RATIO:
        raise SingularDeltaError("minor matrix is singular; Q cannot be recovered")
    Delta = np.linalg.inv(W)
    S = np.zeros((9, 3))
    b = np.zeros(9)
    for c in range(3):
        S[3 * c + 0] = [Delta[1, c], -Delta[0, c], 0.0]
        S[3 * c + 1] = [Delta[2, c], 0.0, -Delta[0, c]]
        S[3 * c + 2] = [0.0, Delta[2, c], -Delta[1, c]]
        b[3 * c + 0] = w[0 + c]
        b[3 * c + 1] = w[6 + c]
        b[3 * c + 2] = w[12 + c]
    cond = np.linalg.cond(S)
    if cond > MAX_LS_COND:
        raise IllConditionedLSError(f"cond(S) = {cond:.3e}")
    v_hat, *_ = np.linalg.lstsq(S, b, rcond=None)
    ls_residual = float(np.linalg.norm(S @ v_hat - b))
    Q_scaled = Delta / np.linalg.det(Delta)
    vQ = np.hstack([v_hat[:, None], Q_scaled])
    return AmbiguityRecovery(Delta, Q_scaled, v_hat, vQ, ls_residual)


def extract_surface(m1, vQ: np.ndarray) -> tuple[AlbedoMap, NormalField]:
    """Albedo (max-normalized) and normals from T = vQ @ M1.

    A single global sign flip makes the mask-mean of n3 negative; individual
    pixels may still disagree on hopeless data, hence the non-strict field.
    """
    grid = m1.grid if hasattr(m1, "grid") else m1
    vQ = np.asarray(vQ, dtype=float)
    if vQ.shape != (3, 4):
        raise BadParamsError("vQ must be 3x4")
    T = vQ @ grid.columns()
    norms = np.linalg.norm(T, axis=0)
    peak = norms.max()
    if peak == 0 or (norms < ZERO_COLUMN_RATIO * peak).any():
        raise ZeroColumnError("a surface column has (near-)zero norm")
    N = T / norms
    if N[2].mean() > 0:
        N = -N
    rho = norms / peak
    return (
        AlbedoMap(PixelGrid.from_columns(rho[None, :], grid.mask)),
        NormalField(PixelGrid.from_columns(N, grid.mask), strict=False),
    )


def _staged(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except UpsError as e:
        raise type(e)(f"[{stage}] {e}") from e


def solve_ups_perspective(
    I: ImageStack,
    camera: CameraModel,
    scheme: str = "central",
    degeneracy_threshold: float = DEGENERACY_THRESHOLD,
) -> ReconstructionReport:
    """Run the full closed-form pipeline on a calibrated perspective stack."""
    camera.require_perspective()
    fac = _staged("factorize", factorize_rank4, I)
    fac = _staged("enforce-sh1", enforce_sh1_constraint, fac)
    m1_grid = PixelGrid.from_columns(fac.M1, fac.mask)
    sol = _staged(
        "minor-system",
        solve_minor_system,
        m1_grid,
        camera,
        scheme=scheme,
        degeneracy_threshold=degeneracy_threshold,
    )
    rec = _staged("recover-ambiguity", recover_ambiguity, sol)
    albedo, normals = _staged("extract", extract_surface, m1_grid, rec.vQ)
    diagnostics = {
        "sh1_residual": fac.sh1_residual,
        "rank_gap": fac.rank_gap,
        "second_sv_ratio": sol.second_sv_ratio,
        "ls_residual": rec.ls_residual,
        "degenerate": False,
    }
    return ReconstructionReport(albedo, normals, diagnostics)
