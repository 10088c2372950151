"""Exception types shared across the package."""


class ReachtestError(Exception):
    """Base class for all errors raised by this package."""


class SpecError(ReachtestError):
    """Malformed or inconsistent specification input.

    Carries an optional source location (1-based line/column) when the
    error originates from a text spec file.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            loc = f"line {line}" + (f", col {column}" if column is not None else "")
            message = f"{loc}: {message}"
        super().__init__(message)


class RunError(ReachtestError):
    """A trace could not be executed on an automaton (missing transition)."""

    def __init__(self, message, step=None):
        self.step = step
        super().__init__(message)


class ContractError(ReachtestError):
    """An operation was called outside its stated precondition."""


class TransportError(ReachtestError):
    """Communication with an external system under test failed."""
