"""Exception hierarchy shared by every layer of the checker."""


class CheckerError(Exception):
    """Base class; the CLI maps any of these to exit code 2."""


class UnboundVariable(CheckerError):
    pass


class RangeOverflow(CheckerError):
    pass


class NotEnabled(CheckerError):
    pass


class ParseError(CheckerError):
    """Syntax error with a 1-based line/column position."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")


class DuplicateName(CheckerError):
    pass


class UndeclaredIdentifier(CheckerError):
    pass


class RangeError(CheckerError):
    pass


class UnsupportedOperator(CheckerError):
    pass


class UnknownAtomTarget(CheckerError):
    pass


class StateBoundExceeded(CheckerError):
    pass


class ResourceBoundExceeded(CheckerError):
    pass


class NotAConfiguration(CheckerError):
    pass


class DuplicateEvent(CheckerError):
    pass


class UnreachableTransition(CheckerError):
    pass


class InternalInvariantViolation(CheckerError):
    """Raised when a counterexample fails replay: always a bug."""
