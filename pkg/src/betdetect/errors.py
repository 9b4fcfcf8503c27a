"""Exception hierarchy shared by every module.

The CLI maps these onto process exit codes: configuration problems exit
with 2, bad input data with 3 and numerical breakdowns with 4.
"""


class BetDetectError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigurationError(BetDetectError, ValueError):
    exit_code = 2


class PresetNotFoundError(ConfigurationError, LookupError):
    pass


class InputDataError(BetDetectError, ValueError):
    exit_code = 3


class InvalidInputError(InputDataError):
    """Non-finite or otherwise unusable numeric argument."""


class InvalidBoundError(InvalidInputError):
    """A bound on the coin outcome that is not strictly positive."""


class DegenerateBoundError(InvalidBoundError):
    """An estimated bound collapsed to zero (all observed pairs equal)."""


class ScoreFileError(InputDataError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class DomainError(BetDetectError, ArithmeticError):
    """Evaluation outside 1 - g*theta > 0, i.e. a wealth factor that is not positive."""

    exit_code = 4


class WealthViolationError(DomainError):
    def __init__(self, step, factor):
        self.step = step
        self.factor = factor
        if factor is None:
            super().__init__(f"nonpositive wealth factor at step {step}")
        else:
            super().__init__(f"wealth factor {factor!r} <= 0 at step {step}")
