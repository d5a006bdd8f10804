"""Exception hierarchy shared by every module."""


class RGLError(Exception):
    """Base class for toolkit errors."""


class ParameterError(RGLError, ValueError):
    """An argument is outside its admissible range."""


class ConfigError(RGLError, ValueError):
    """A configuration file or flag combination is invalid."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FormatError(RGLError, ValueError):
    """A file does not follow its binary layout."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class TrainingError(RGLError, ArithmeticError):
    """Training diverged."""

    def __init__(self, message, epoch):
        self.epoch = epoch
        super().__init__(f"{message} (epoch {epoch})")


class DegenerateDirectionError(RGLError, ArithmeticError):
    """The projected gradient vanished, so the boundary is unreachable in the subspace."""
