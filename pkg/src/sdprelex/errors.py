"""Exception hierarchy shared by the library and the CLI."""


class SdpRelexError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(SdpRelexError, ValueError):
    """Malformed input data (CoNLL-U, i2b2 annotations, model files, vectors)."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TreeError(FormatError):
    """A sentence violates dependency-tree invariants."""


class NonProjectiveError(TreeError):
    """The arc-standard system cannot derive a non-projective tree."""


class IllegalTransitionError(SdpRelexError, ValueError):
    pass


class NumericalError(SdpRelexError, ArithmeticError):
    """Training diverged or a statistic is undefined."""


class DegenerateTestError(NumericalError):
    pass
