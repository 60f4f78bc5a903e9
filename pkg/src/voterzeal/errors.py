"""Exception hierarchy. CLI exit codes are attached to each class."""


class VoterError(Exception):
    exit_code = 1


class InputError(VoterError):
    """Malformed or inconsistent input data."""

    exit_code = 2


class ParseError(InputError):
    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class DomainError(InputError, ValueError):
    """A precondition on argument values is violated."""


class ConvergenceError(VoterError):
    exit_code = 3

    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class SizeError(VoterError):
    """State space or problem size exceeds a hard bound."""

    exit_code = 4
