"""Exception hierarchy shared by the library and the command line front end."""


class QdyneError(Exception):
    """Base class for all errors raised by :mod:`qdyne`."""


class InputError(QdyneError, ValueError):
    """Malformed user input: bad files, units, ranges or array shapes."""


class SequenceSyntaxError(InputError):
    """A pulse-sequence document could not be parsed.

    Carries the 1-based ``line`` and ``column`` of the offending token.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class PhysicsError(QdyneError, ValueError):
    """A physical precondition was violated (e.g. an interaction with no prepared sensor)."""


class EmptyResultError(QdyneError):
    """An operation produced nothing to report (e.g. no trace passed the acceptance window)."""


class ConvergenceError(QdyneError, RuntimeError):
    """An iterative fit did not converge. ``last_iterate`` holds the final parameter vector."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate
