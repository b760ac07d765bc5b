"""Exception types shared across the package."""


class OtflowError(Exception):
    """Base class for all otflow errors."""


class DetNotOne(OtflowError):
    """Input matrix determinant is not exactly 1."""


class RealSpectrum(OtflowError):
    """All three eigenvalues are real; the matrix is not of Inoue type."""


class LambdaNotExpanding(OtflowError):
    """The real eigenvalue is not > 1."""


class DegenerateEigenvectors(OtflowError):
    """Eigenvector matrix V is numerically singular."""


class IndexOutOfRange(OtflowError):
    """Grid index outside the fundamental domain."""


class ResolutionMismatch(OtflowError):
    """Fiber resolutions differ between axes or are too small."""


class NonPositiveHeight(OtflowError):
    """A point has Im w <= 0."""


class StencilOutOfDomain(OtflowError):
    """Finite-difference stencil would leave the upper half plane."""


class NotPositive(OtflowError):
    """Reconstructed metric lost positivity."""

    def __init__(self, block, value, index, t=None):
        self.block = block
        self.value = value
        self.index = index
        self.t = t
        where = f" at t={t:.6g}" if t is not None else ""
        super().__init__(
            f"metric block {block} non-positive ({value:.6g}) at grid index {index}{where}"
        )


class UnstableStep(OtflowError):
    """Time step produced NaN/Inf or blew past positivity."""


class CannotSatisfyPositivity(OtflowError):
    """Noise amplitude could not be reduced to an admissible level."""


class InsufficientSamples(OtflowError):
    """A trajectory report needs more diagnostics rows than available."""


class ResolutionTooCoarse(OtflowError):
    """Curvature assembly needs at least 8 points per axis."""


class ConfigError(OtflowError):
    """Run configuration failed validation."""
