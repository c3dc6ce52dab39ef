"""Exception types shared across the package."""


class UpsError(Exception):
    """Base class for all package errors."""


class BadParamsError(UpsError, ValueError):
    """Invalid or inconsistent parameters."""


class EmptyDomainError(UpsError):
    """No valid pixel remains after masking / stencil erosion."""


class WrongProjectionError(UpsError):
    """Operation requires the other camera projection."""


class NonPositiveDepthError(UpsError):
    """Depth values must be strictly positive on the mask."""


class MaskMismatchError(UpsError):
    """Operands are defined on different pixel masks."""


class DimensionMismatchError(UpsError, ValueError):
    """Matrix/array dimensions do not agree."""


class RankDeficientLightingError(UpsError):
    """Lighting matrix does not reach the required rank."""


class RankDeficientImagesError(UpsError):
    """Image matrix has numerical rank below four."""


class BadSignatureError(UpsError):
    """Fitted quadratic form does not have the (1 negative, 3 positive) signature."""


class DegenerateSurfaceError(UpsError):
    """Surface too simple: integrability matrix loses rank."""


class TooFewPixelsError(UpsError):
    """Fewer pixels than unknowns in the integrability system."""


class SingularDeltaError(UpsError):
    """Minor matrix assembled from the null vector is singular."""


class IllConditionedLSError(UpsError):
    """Least-squares system for the translation part is too ill-conditioned."""


class ZeroColumnError(UpsError):
    """A surface column collapsed to (numerically) zero norm."""


class NotLorentzError(UpsError):
    """Matrix is not a scaled Lorentz transformation within tolerance."""


class BadBoostError(UpsError, ValueError):
    """Boost velocity must lie strictly inside the unit ball."""
