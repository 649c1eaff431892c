"""Exception types shared across the package."""


class SecGameError(Exception):
    """Base class for every error raised by secgame."""


class SpecError(SecGameError, ValueError):
    """A configuration file could not be parsed into a spec.

    ``location`` points at the offending element (a JSON path or a
    ``line:column`` pair) so command-line users can find it.
    """

    def __init__(self, message, location=None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class NotFoundError(SecGameError, LookupError):
    """An unknown player, state or action was referenced."""


class ContractError(SecGameError, ValueError):
    """A precondition of an operation was violated by the caller."""


class ConvergenceError(SecGameError, RuntimeError):
    """An iterative computation stopped before reaching its tolerance."""

    def __init__(self, message, residual):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")
