"""Exception types shared across the package."""


class NlsLabError(Exception):
    """Base class for all nlslab errors."""


class InvalidExponent(NlsLabError, ValueError):
    """Nonlinearity exponent outside the sublinear range (0, 1)."""


class InadmissibleCoefficient(NlsLabError, ValueError):
    """Complex coefficients violate the sign conditions required for localization."""


class InvalidDomain(NlsLabError, ValueError):
    """Bad domain geometry or discretization request."""


class DomainError(NlsLabError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class CenterUnsupported(NlsLabError, ValueError):
    """Off-center balls are only supported on interval grids."""


class OutOfRange(NlsLabError, ValueError):
    """Radius or coordinate outside the grid."""


class ConvergenceFailure(NlsLabError, RuntimeError):
    """An iterative linear-algebra routine failed to converge."""


class NonConvergence(NlsLabError, RuntimeError):
    """Nonlinear solve did not reach the requested tolerance.

    The best iterate and its history are attached when available.
    """

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class SingularOperator(NlsLabError, RuntimeError):
    """The assembled linear operator is numerically singular (resonant coefficients)."""


class NonpositiveTime(NlsLabError, ValueError):
    """Self-similar evaluation requested at t <= 0."""


class InnerNonConvergence(NlsLabError, RuntimeError):
    """Inner iteration of an implicit time step failed to converge."""


class ConfigError(NlsLabError, ValueError):
    """Scenario configuration is malformed.

    ``keys`` lists the offending key paths verbatim.
    """

    def __init__(self, message, keys=()):
        super().__init__(message)
        self.keys = list(keys)


class MissingArtifacts(NlsLabError, FileNotFoundError):
    """A report directory lacks the files needed for plot emission."""
