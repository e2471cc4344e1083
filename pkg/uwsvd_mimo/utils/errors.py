"""Exception hierarchy shared by the library, the harness and the CLI.

The CLI maps ``ConfigError`` to exit code 1 and ``NumericalError`` to exit
code 2; everything else is a bug and is allowed to propagate.
"""

from typing import Optional


class UwsvdError(Exception):
    """Base class for all errors raised by uwsvd_mimo."""


class ConfigError(UwsvdError, ValueError):
    """Invalid geometry, fading, constellation, scenario file or CLI value."""


class DimensionError(UwsvdError, ValueError):
    """Array shapes do not match what the operation requires."""


class NumericalError(UwsvdError, ArithmeticError):
    """A numerical procedure failed (non-convergence, non-finite values)."""


class RankDeficientError(NumericalError):
    """A matrix that must have full column rank does not.

    Attributes:
        user: Index of the offending user terminal, when the matrix is a
            per-user sub-channel; None for whole-matrix checks.
    """

    def __init__(self, message: str, user: Optional[int] = None):
        super().__init__(message)
        self.user = user


class SingularPreconditionerError(NumericalError):
    """A splitting preconditioner has a (numerically) zero diagonal entry."""


class SingularSigmaError(NumericalError):
    """Post-processing would divide by a (numerically) zero singular value."""


class BreakdownError(NumericalError):
    """A search direction has no curvature under the system matrix."""


class ZeroChannelError(NumericalError):
    """Noise calibration was asked for a channel with zero energy."""


class ResultWriteError(UwsvdError, OSError):
    """A result or sidecar file could not be written."""
