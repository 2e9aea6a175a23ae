"""Exception hierarchy."""


class HeisError(Exception):
    """Base class for all package errors."""


class ConfigError(HeisError):
    """Invalid problem configuration. ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        self.key = key
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)


class ProfileDomainError(HeisError):
    """A curve profile was evaluated outside its validity interval."""


class PreconditionError(HeisError):
    """A check was called with inputs violating its precondition.

    Distinct from a failed check: the inequality was never tested.
    """


class LoopResidualError(HeisError):
    """The contact one-form failed the discrete closedness test."""


class DisconnectedDomainError(HeisError):
    pass
