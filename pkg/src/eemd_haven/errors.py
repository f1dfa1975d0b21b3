"""Exception hierarchy. The CLI maps ValidationError to exit 1 and
NumericalError to exit 2."""


class EemdHavenError(Exception):
    """Base class for all package errors."""


class ValidationError(EemdHavenError, ValueError):
    """Input data or configuration violates a documented precondition."""


class NumericalError(EemdHavenError, ArithmeticError):
    """A computation could not produce a well-defined result."""


class RankDeficiencyError(NumericalError):
    """Design matrix is not of full column rank.

    Attributes
    ----------
    columns : list of str
        Names of the columns found to be linear combinations of earlier ones.
    """

    def __init__(self, columns, message=None):
        self.columns = list(columns)
        if message is None:
            message = "design matrix is rank deficient; collinear columns: {0}".format(
                ", ".join(self.columns))
        super().__init__(message)


class ImfCountMismatch(ValidationError):
    """Series of one panel were decomposed into different numbers of IMFs."""

    def __init__(self, counts):
        self.counts = dict(counts)
        detail = ", ".join("{0}={1}".format(k, v) for k, v in self.counts.items())
        super().__init__("IMF counts differ across series: " + detail)


class MonotoneResidue(EemdHavenError):
    """Raised by the sifting primitives when the signal has too few extrema
    to build both envelopes. The decomposition loop treats it as the
    termination signal."""
