"""Exception hierarchy.

Everything raised on purpose by the package derives from ``SchedError`` so the
command line can map it onto an exit code.
"""


class SchedError(Exception):
    """Base class for domain errors (bad input, bad spec)."""


class InvalidInstance(SchedError):
    pass


class IncompleteTrace(SchedError):
    pass


class IncompatibleMode(SchedError):
    pass


class NonTermination(SchedError):
    """The event loop exceeded its budget; almost always a zero-length switching bug."""


class UnsupportedDistribution(SchedError):
    pass


class LengthMismatch(SchedError):
    pass


class EmptySample(SchedError):
    pass


class EmptyInstance(SchedError):
    pass


class TooLarge(SchedError):
    def __init__(self, message, limit=None):
        super().__init__(message)
        self.limit = limit


class VerificationFailure(SchedError):
    """A bound or invariant that should hold was observed to fail."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
