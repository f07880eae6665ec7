"""Exception types raised across the package."""


class PisatError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(PisatError):
    """Inputs have inconsistent shapes."""


class NotSymmetric(PisatError):
    """A symmetric matrix was required."""


class NotMMatrix(PisatError):
    """An M-matrix was required."""


class CertificateFailure(PisatError):
    """A constructed certificate failed its own verification."""


class InvalidSectorPair(PisatError):
    """A nonlinearity description violates the sector-[0, 1] class."""


class UnsupportedVariant(PisatError):
    """Operation not defined for this controller variant."""


class MaxIterationsExceeded(PisatError):
    """Iteration cap reached before the convergence criterion."""


class NonFiniteState(PisatError):
    """Simulation state blew up or became non-finite."""


class SolverFailure(PisatError):
    """The LP pivot guard tripped before reaching an optimum."""


class DimensionTooLarge(PisatError):
    """Brute-force enumeration is restricted to small dimensions."""


class ConditionViolated(PisatError):
    """A certificate precondition does not hold, so the certificate is
    not applicable.  This is not a disproof of optimality."""


class EpsilonTooLarge(PisatError):
    """Requested decrease-rate epsilon exceeds the admissible bound."""


class ParseError(PisatError):
    """Malformed input data file."""


class GapTooLarge(PisatError):
    """Temperature series has a sampling gap wider than allowed."""


class ConfigError(PisatError):
    """Invalid run configuration."""
