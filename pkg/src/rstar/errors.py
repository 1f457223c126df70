"""Exception hierarchy shared by all modules.

Each base class maps to one CLI exit code: validation problems exit 2,
numerical failures exit 3 and I/O problems exit 4.
"""


class RstarError(Exception):
    exit_code = 1


class ValidationError(RstarError, ValueError):
    exit_code = 2


class NumericalError(RstarError, ArithmeticError):
    exit_code = 3


class IoError(RstarError, OSError):
    exit_code = 4


# timeseries_io
class MissingColumn(ValidationError):
    def __init__(self, column):
        super().__init__(f"missing column {column!r}")
        self.column = column


class NonContiguousDates(ValidationError):
    def __init__(self, date):
        super().__init__(f"dates are not consecutive quarters: expected {date}")
        self.date = date


class NaNInWindow(ValidationError):
    def __init__(self, column, date):
        super().__init__(f"missing value in column {column!r} at {date}")
        self.column = column
        self.date = date


class SeriesTooShort(ValidationError):
    pass


# ssm
class SingularResidualCovariance(NumericalError):
    def __init__(self, t):
        super().__init__(f"one-step-ahead residual covariance is singular at t={t}")
        self.t = t


# models
class InvalidParams(ValidationError):
    pass


# mle
class NoConvergence(NumericalError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class LikelihoodUndefined(NumericalError):
    pass


# mue
class EmptyGrid(ValidationError):
    pass


class ZeroVariance(NumericalError):
    pass


class DegenerateDummy(ValidationError):
    pass


class RankDeficient(NumericalError):
    def __init__(self, tau):
        super().__init__(f"break regression is rank deficient at tau={tau}")
        self.tau = tau


class VariantMismatch(ValidationError):
    pass


class UnknownStatistic(ValidationError):
    pass
