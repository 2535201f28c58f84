"""Exception types raised across the library.

Everything inherits from TsadvError so callers can catch library failures
with a single except clause. Forecaster-side runtime failures (including
all remote protocol errors) additionally inherit from OracleError, which
is what the evaluation harness traps per window.
"""

from __future__ import annotations


class TsadvError(Exception):
    """Base class for all library errors."""


# ---------------------------------------------------------------------------
# Series loading and slicing


class EmptySeriesError(TsadvError):
    """A series (or CSV column) contained no values."""


class ColumnNotFoundError(TsadvError):
    """The requested CSV column does not exist."""


class CsvParseError(TsadvError):
    """A CSV cell could not be parsed as a finite number.

    `row` is the 1-based data row index (the header row is row 0).
    """

    def __init__(self, message: str, row: int):
        super().__init__(message)
        self.row = row


class SeriesTooShortError(TsadvError):
    """The series is too short for the requested operation."""


class InvalidHorizonError(TsadvError):
    """Requested forecast horizon is not usable (< 1, or exceeds limits)."""


class EmptyInputError(TsadvError):
    """An operation received an empty value sequence."""


# ---------------------------------------------------------------------------
# Forecasters


class OracleError(TsadvError):
    """A forecaster failed to produce a usable forecast at query time."""


class HistoryTooShortError(OracleError):
    """The supplied history is shorter than the model requires."""


class HorizonTooLargeError(OracleError):
    """The model cannot forecast as far ahead as requested."""


class ContractViolationError(OracleError):
    """A forecaster returned output violating the length/finiteness contract."""


class SingularSystemError(TsadvError):
    """Least-squares fit hit a rank-deficient design matrix."""


class InvalidAlphaError(TsadvError):
    """Exponential smoothing factor outside (0, 1]."""


# ---------------------------------------------------------------------------
# Remote forecaster protocol

class RemoteError(OracleError):
    """Base class for remote-forecaster protocol failures."""


class RemoteTimeoutError(RemoteError):
    """The endpoint was unreachable or did not answer within the timeout."""


class RemoteHttpError(RemoteError):
    """The endpoint answered with a non-200 status code."""

    def __init__(self, message: str, status: int):
        super().__init__(message)
        self.status = status


class MalformedResponseError(RemoteError):
    """The endpoint's body was not the expected JSON forecast payload."""


class ResponseLengthError(RemoteError):
    """The returned forecast length does not match the requested horizon."""

    def __init__(self, message: str, expected: int, actual: int):
        super().__init__(message)
        self.expected = expected
        self.actual = actual


class InvalidEndpointError(TsadvError):
    """The remote endpoint URL is syntactically invalid."""


# ---------------------------------------------------------------------------
# Attack engine


class ZeroMeanReferenceError(TsadvError):
    """Cannot resolve a mean-relative budget: the reference mean is ~0."""


class DegenerateScaleError(TsadvError):
    """Cannot size a probe: both std and |mean| of the window are ~0."""


class LengthMismatchError(TsadvError):
    """Two sequences that must align have different lengths."""


# ---------------------------------------------------------------------------
# Metrics


class ConstantSeriesError(TsadvError):
    """Autocorrelation is undefined for a constant series."""


class TooShortError(TsadvError):
    """Input too short for the requested number of lags."""


class ZeroBaselineError(TsadvError):
    """Relative increase is undefined for a zero baseline."""


# ---------------------------------------------------------------------------
# Harness


class NoWindowsError(TsadvError):
    """The test split yields no evaluation windows."""


class TooFewPairsError(TsadvError):
    """Too few untied pairs for the paired sign test."""


class InvalidRatioError(TsadvError):
    """Sweep ratios must be positive, finite, and strictly ascending."""


class PlanError(TsadvError):
    """An experiment plan failed validation."""
