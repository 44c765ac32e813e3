class WPBayesError(Exception):
    """Base class for every error raised by this project."""


class DomainError(WPBayesError, ValueError):
    """An argument violates a precondition or a model invariant."""


class ParseError(DomainError):
    """A file could not be parsed; carries the location of the problem."""

    def __init__(self, message: str, path=None, line: int = None, column: int = None):
        self.path = path
        self.line = line
        self.column = column
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
                if column is not None:
                    location += f":{column}"
            location += ": "
        super().__init__(f"{location}{message}")


class SignalIOError(WPBayesError):
    """Reading or writing a file failed at the operating-system level."""

    def __init__(self, path, reason):
        self.path = path
        super().__init__(f"{path}: {reason}")


class UsageError(WPBayesError):
    """The command line is incomplete in a way argparse cannot express on its own."""
