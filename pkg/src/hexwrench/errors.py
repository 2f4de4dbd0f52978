"""Exception hierarchy shared across the package."""


class HexwrenchError(Exception):
    """Base class for all errors raised by this package."""


class SingularRotation(HexwrenchError):
    """Rotation too close to the attitude-parametrization singularity."""


class NonPsdCovariance(HexwrenchError):
    """A covariance matrix is not symmetric positive semi-definite."""


class CholeskyFailure(HexwrenchError):
    """Cholesky factorization failed even after jitter recovery."""


class SingularInnovation(HexwrenchError):
    """Innovation covariance is not invertible (check measurement noise)."""


class EmptyWindow(HexwrenchError):
    """An averaging window received no samples."""


class UnstableGains(HexwrenchError):
    """Admittance gains put a discrete-time pole outside the unit circle."""


class DivergenceDetected(HexwrenchError):
    """A scenario blew up (vehicles separated beyond the physical limit)."""


class ConfigError(HexwrenchError):
    """Malformed or unknown content in a scenario config file."""


class FormatError(HexwrenchError):
    """Malformed log file content."""


class UnknownChannel(HexwrenchError):
    """Requested plot channel does not exist."""
