"""Exception types shared across the package."""


class LsbandError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(LsbandError):
    """Inputs have incompatible or unsupported dimensions."""


class InvalidBandwidth(LsbandError):
    """Bandwidth matrix is not symmetric positive definite or its class tag is wrong."""


class InvalidModel(LsbandError):
    """Mixture specification is malformed (weights, covariances, shapes)."""


class NotSpherical(LsbandError):
    """Operation requires a single zero-mean isotropic Gaussian component."""


class GridCoverageError(LsbandError):
    """Evaluation grid does not cover the super-level set of interest."""


class EmptyContour(LsbandError):
    """Requested level produced no iso-curve inside the grid."""


class DegenerateGradient(LsbandError):
    """Gradient vanishes on the contour; the risk expansion is not applicable."""


class DegenerateSample(LsbandError):
    """Sample covariance is rank deficient; pilot rules are undefined."""


class NoConvergence(LsbandError):
    """Every optimizer start failed to converge."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []
