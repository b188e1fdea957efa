"""Exception types shared across the package."""


class CclabError(Exception):
    """Base class for all errors raised by cclab."""


class PreconditionError(CclabError, ValueError):
    """An operation was called outside its domain."""


class VerificationError(CclabError):
    """A sampled audit found a counterexample.

    ``witness`` holds the offending point (or whatever object exposes the
    failure) so callers can inspect it.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ConvergenceError(CclabError):
    """An iterative routine hit its iteration cap; ``best`` is the best bound."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class SearchExhausted(CclabError):
    """A randomized or combinatorial search ran out of budget.

    ``best`` carries the closest near-miss the search saw.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConfigError(CclabError, ValueError):
    """Malformed experiment configuration."""
