"""Scaled Lorentz transformations, GBR matrices and 2x2 minor utilities.

A scaled Lorentz matrix satisfies ``A^T J A = s^2 J`` with
``J = diag(-1, 1, 1, 1)``.  The canonical parameterization used here is
``(s, v, O, proper, orthochronous)`` with ``s > 0`` after decomposition; the
overall sign is folded into the two epsilon flags, which is required for a
testable uniqueness statement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadBoostError, BadParamsError, NotLorentzError

J = np.diag([-1.0, 1.0, 1.0, 1.0])

CLASSIFY_TOL = 1e-8
ROTATION_TOL = 1e-9


def _check_rotation(O: np.ndarray) -> np.ndarray:
    O = np.asarray(O, dtype=float)
    if O.shape != (3, 3):
        raise BadParamsError("O must be 3x3")
    if np.abs(O.T @ O - np.eye(3)).max() > ROTATION_TOL or np.linalg.det(O) < 0:
        raise BadParamsError("O must be a rotation (orthogonal, det +1)")
    return O


@dataclass
class ScaledLorentz:
    """(s, v, O, proper, orthochronous) parameterization, 7 degrees of freedom."""

    s: float
    v: np.ndarray
    O: np.ndarray
    proper: bool = True
    orthochronous: bool = True

    def __post_init__(self):
        self.s = float(self.s)
        if self.s == 0:
            raise BadParamsError("scale s must be nonzero")
        self.v = np.asarray(self.v, dtype=float).reshape(3)
        if np.linalg.norm(self.v) >= 1:
            raise BadParamsError("boost vector must satisfy |v| < 1")
        self.O = _check_rotation(self.O)

    @property
    def gamma(self) -> float:
        return 1.0 / np.sqrt(1.0 - float(self.v @ self.v))

    @property
    def epsilon1(self) -> int:
        return 1 if self.orthochronous else -1

    @property
    def epsilon2(self) -> int:
        return -1 if (self.proper != self.orthochronous) else 1

    @classmethod
    def identity(cls) -> "ScaledLorentz":
        return cls(1.0, np.zeros(3), np.eye(3))


def boost_block(v: np.ndarray) -> np.ndarray:
    """The symmetric positive-definite block I3 + gamma^2/(1+gamma) v v^T."""
    v = np.asarray(v, dtype=float).reshape(3)
    n2 = float(v @ v)
    if n2 >= 1:
        raise BadBoostError("|v| must be < 1")
    gamma = 1.0 / np.sqrt(1.0 - n2)
    return np.eye(3) + (gamma**2 / (1.0 + gamma)) * np.outer(v, v)


def realize(slt: ScaledLorentz) -> np.ndarray:
    """4x4 matrix of the block formula; inverse of :func:`decompose`."""
    g = slt.gamma
    e1, e2 = slt.epsilon1, slt.epsilon2
    A = np.empty((4, 4))
    A[0, 0] = e1 * g
    A[0, 1:] = e1 * g * slt.v @ slt.O
    A[1:, 0] = e2 * g * slt.v
    A[1:, 1:] = e2 * boost_block(slt.v) @ slt.O
    return slt.s * A


@dataclass
class LorentzClassification:
    is_scaled_lorentz: bool
    s: float
    proper: bool
    orthochronous: bool
    residual: float


def classify(A: np.ndarray, tol: float = CLASSIFY_TOL) -> LorentzClassification:
    """Test A^T J A = s^2 J with s = |det A|^(1/4) and read off the flags.

    Not being scaled Lorentz is signaled through the flag, not an exception;
    the residual (max-abs, relative to s^2) is always reported.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (4, 4):
        raise BadParamsError("classify expects a 4x4 matrix")
    det = np.linalg.det(A)
    if det == 0:
        return LorentzClassification(False, 0.0, False, False, np.inf)
    s = abs(det) ** 0.25
    residual = np.abs(A.T @ J @ A - s**2 * J).max() / s**2
    ok = residual <= tol
    An = A / s
    return LorentzClassification(ok, s, np.linalg.det(An) > 0, An[0, 0] > 0, residual)


def decompose(A: np.ndarray, tol: float = CLASSIFY_TOL) -> ScaledLorentz:
    """Unique (s > 0, v, O, flags) with realize(result) == A.

    Raises NotLorentzError when the classification residual exceeds ``tol``.
    """
    info = classify(A, tol)
    if not info.is_scaled_lorentz:
        raise NotLorentzError(f"classification residual {info.residual:.3e} exceeds tol")
    A = np.asarray(A, dtype=float)
    An = A / info.s
    e1 = 1 if info.orthochronous else -1
    e2 = -1 if (info.proper != info.orthochronous) else 1
    gamma = abs(An[0, 0])
    v = e2 * An[1:, 0] / gamma
    O = e2 * np.linalg.solve(boost_block(v), An[1:, 1:])
    return ScaledLorentz(info.s, v, O, info.proper, info.orthochronous)


def boost_eigencheck(v: np.ndarray) -> np.ndarray:
    """Sorted eigenvalues of the boost block; equals {1, 1, gamma}."""
    return np.sort(np.linalg.eigvalsh(boost_block(v)))


def minor2(A: np.ndarray, rows: tuple[int, int], cols: tuple[int, int]) -> float:
    """2x2 minor A[i,j] A[k,l] - A[k,j] A[i,l] with 1-based index pairs i<k, j<l."""
    A = np.asarray(A, dtype=float)
    i, k = rows
    j, l = cols
    if not (i < k and j < l):
        raise BadParamsError("index pairs must be strictly increasing")
    if not (1 <= i and k <= A.shape[0] and 1 <= j and l <= A.shape[1]):
        raise IndexError(f"minor indices {(rows, cols)} out of bounds for shape {A.shape}")
    i, k, j, l = i - 1, k - 1, j - 1, l - 1
    return float(A[i, j] * A[k, l] - A[k, j] * A[i, l])


@dataclass(frozen=True)
class GBRParams:
    lam: float
    mu: float = 0.0
    nu: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        if self.lam == 0 or self.beta == 0:
            raise BadParamsError("GBR requires lambda != 0 and beta != 0")


def make_gbr(params: GBRParams) -> np.ndarray:
    """beta * [[lam, 0, -mu], [0, lam, -nu], [0, 0, 1]]."""
    lam, mu, nu, beta = params.lam, params.mu, params.nu, params.beta
    return beta * np.array([[lam, 0.0, -mu], [0.0, lam, -nu], [0.0, 0.0, 1.0]])


def is_scaled_gbr(B: np.ndarray, tol: float = CLASSIFY_TOL) -> bool:
    """Invertibility plus the five 2x2-minor identities of scaled GBR matrices.

    Minors are evaluated on B scaled to unit max-entry, so the test is
    scale-invariant.
    """
    B = np.asarray(B, dtype=float)
    if B.shape != (3, 3):
        raise BadParamsError("is_scaled_gbr expects a 3x3 matrix")
    scale = np.abs(B).max()
    if scale == 0:
        return False
    Bn = B / scale
    if abs(np.linalg.det(Bn)) <= tol:
        return False
    conditions = [
        minor2(Bn, (2, 3), (1, 2)),
        minor2(Bn, (2, 3), (1, 3)),
        minor2(Bn, (1, 3), (2, 3)),
        minor2(Bn, (1, 3), (1, 2)),
        minor2(Bn, (2, 3), (2, 3)) - minor2(Bn, (1, 3), (1, 3)),
    ]
    return max(abs(c) for c in conditions) <= tol


def lower_submatrix(A: np.ndarray) -> np.ndarray:
    """Rows and columns 2..4 of a 4x4 matrix."""
    A = np.asarray(A, dtype=float)
    if A.shape != (4, 4):
        raise BadParamsError("lower_submatrix expects a 4x4 matrix")
    return A[1:, 1:].copy()


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Haar-ish random rotation via QR with a determinant fix."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q


def sample_scaled_lorentz(
    rng: np.random.Generator,
    v_max: float = 0.95,
    v_min: float = 0.0,
    s_range: tuple[float, float] = (0.2, 5.0),
    random_flags: bool = True,
    allow_negative_s: bool = False,
) -> ScaledLorentz:
    """Random scaled Lorentz sample for round-trip and experiment protocols."""
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    v = direction * rng.uniform(v_min, v_max)
    s = rng.uniform(*s_range)
    if allow_negative_s and rng.random() < 0.5:
        s = -s
    flags = (bool(rng.integers(2)), bool(rng.integers(2))) if random_flags else (True, True)
    return ScaledLorentz(s, v, random_rotation(rng), flags[0], flags[1])
