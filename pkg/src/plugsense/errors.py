"""Exception hierarchy shared by the core library, service, and CLI."""


class PlugsenseError(Exception):
    """Base class for all plugsense errors."""


class UsageError(PlugsenseError):
    """Bad parameters or configuration (CLI exit code 1)."""


class DataError(PlugsenseError):
    """Malformed, empty, or inconsistent input data (CLI exit code 2)."""


class AlgorithmError(PlugsenseError):
    """A computation cannot proceed on otherwise valid data (CLI exit code 3)."""


class DegenerateLabelingError(AlgorithmError):
    """A label class emptied out, so per-class models cannot be fit.

    Carries the diagnostics accumulated up to the failing round.
    """

    def __init__(self, message: str, diagnostics=()):
        super().__init__(message)
        self.diagnostics = tuple(diagnostics)


class EstimatorInfeasibleError(AlgorithmError):
    """No nonnegative count solution exists on the whole error-rate grid."""
