"""Exception and warning types raised across the package."""


class CkrrError(Exception):
    """Base class for all errors raised by ckrr."""


class DegenerateKernel(CkrrError, ValueError):
    pass


class NotPSD(CkrrError, ValueError):
    pass


class SolveFailure(CkrrError, ArithmeticError):
    pass


class SupportViolation(CkrrError, ValueError):
    pass


class NoConvergence(CkrrError, RuntimeError):
    pass


class BranchViolation(CkrrError, ArithmeticError):
    pass


class DenominatorNonPositive(CkrrError, ArithmeticError):
    pass


class NegativeRadicand(CkrrError, ArithmeticError):
    pass


class NonPositiveM(CkrrError, ArithmeticError):
    pass


class OutOfRange(CkrrError, ValueError):
    pass


class Unreachable(CkrrError, ValueError):
    pass


class ConfigError(CkrrError, ValueError):
    pass


class CsvParseError(CkrrError, ValueError):
    pass


class InsufficientRows(CkrrError, ValueError):
    pass


class InstabilityWarning(UserWarning):
    """The rescaled empirical-risk estimate divides by a tiny quantity; treat its output with care."""


class NonUnimodalWarning(UserWarning):
    """The grid scan of the risk estimate found more than one local minimum."""
