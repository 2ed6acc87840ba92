"""Exception types shared across the package.

The CLI maps these onto process exit codes: problem/configuration errors
exit with 1, numeric failures with 2, I/O failures with 3.
"""


class FracIsaacsError(Exception):
    """Base class for all package errors."""


class SpecError(FracIsaacsError):
    """A problem specification is malformed, incomplete, or non-finite."""


class AssumptionError(FracIsaacsError):
    """A structural assumption (positivity of c or a, threshold) is violated."""

    def __init__(self, message, reasons=None):
        super().__init__(message)
        self.reasons = list(reasons or [])


class GeometryError(FracIsaacsError):
    """Grid geometries do not match, or a point falls outside the grid."""


class GridAlignmentError(FracIsaacsError):
    """A requested shift or step is not aligned with the grid."""


class ThresholdError(FracIsaacsError):
    """The zero-order coefficient is below the certificate threshold."""


class PreconditionError(FracIsaacsError):
    """An operation's analytic precondition fails on the supplied data."""

    def __init__(self, message, offenders=None):
        super().__init__(message)
        self.offenders = list(offenders or [])


class SizeCapError(FracIsaacsError):
    """A brute-force operation was refused because the grid is too large."""


class FitError(FracIsaacsError):
    """Not enough usable data points for a regression."""


class NumericFailure(FracIsaacsError):
    """A numeric acceptance condition failed during a suite run."""
