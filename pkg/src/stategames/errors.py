"""Exception types shared across the package."""


class GameFileError(ValueError):
    """A game or potential file failed to parse.

    The message names the exact path of the offending element, e.g.
    ``kernels[2][1]: expected 4 entries, found 3``.
    """


class GameValidationError(ValueError):
    """A structurally well-formed game violated a content invariant."""

    def __init__(self, report):
        self.report = report
        super().__init__(str(report))


class BudgetExceededError(ValueError):
    """The induced chain's full state space exceeds the configured budget."""


class InternalInvariantError(RuntimeError):
    """A cross-checked internal invariant failed; indicates a bug, not bad input."""
