"""Exception types shared across modules; the CLI maps them to exit codes."""


class BosonIdError(Exception):
    """Base class."""

    exit_code = 1


class InputError(BosonIdError, ValueError):
    """Malformed or inconsistent input."""

    exit_code = 2


class NumericalError(BosonIdError, ArithmeticError):
    """A computation left its numerically valid regime."""

    exit_code = 3


class SizeLimitError(BosonIdError, ValueError):
    """A size cap was exceeded."""

    exit_code = 4
