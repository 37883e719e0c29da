class SequencingError(Exception):
    """Base class for every error raised by the sequencing toolkit."""


class InvalidScheduleError(SequencingError, ValueError):
    """A schedule rule is non-positive or not strictly increasing."""


class DomainError(SequencingError, ValueError):
    """An argument lies outside the domain of a closed form or operation."""


class UnsupportedRegimeError(SequencingError):
    """The requested parameters are outside the regime the construction covers (e.g. H > k/2)."""


class ProtocolError(SequencingError):
    """An advice channel was queried more times than its advice length."""


class InconsistentAnswersError(SequencingError):
    """No candidate is compatible with the answers: the lie budget was exceeded."""


class PreconditionError(SequencingError):
    """An operation precondition does not hold for the given input."""


class ConfigError(SequencingError):
    """A simulation configuration or CLI invocation is infeasible."""
