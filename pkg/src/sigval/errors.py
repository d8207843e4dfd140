"""Exception hierarchy.

``InputError`` subclasses signal bad or inconsistent inputs (CLI exit code 2);
``ComputationError`` subclasses signal a statistic that cannot be computed on
otherwise valid data (exit code 3). Both derive from ``ValueError``.
"""


class SigvalError(ValueError):
    """Base class for all package errors."""


class InputError(SigvalError):
    pass


class ComputationError(SigvalError):
    pass


class MalformedRecord(InputError):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class DuplicateKey(InputError):
    def __init__(self, date, ticker):
        self.date = date
        self.ticker = ticker
        super().__init__(f"duplicate (date, ticker) pair: ({date}, {ticker})")


class UnknownSignal(InputError):
    def __init__(self, text):
        self.text = text
        super().__init__(f"unknown signal label: {text!r}")


class LengthMismatch(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class NonFiniteInput(InputError):
    pass


class EmptyInput(InputError):
    pass


class MissingRole(InputError):
    def __init__(self, role, date=None, ticker=None):
        self.role = role
        self.date = date
        self.ticker = ticker
        where = f" for ({date}, {ticker})" if ticker is not None else ""
        super().__init__(f"missing embedding role {role!r}{where}")


class KeyMismatch(InputError):
    pass


class UnknownTicker(InputError):
    pass


class UnknownDate(InputError):
    pass


class InvalidSpec(InputError):
    pass


class ScopeViolation(InputError):
    """A non-actionable row reached a computation restricted to buy/strong_buy."""


class ZeroVector(ComputationError):
    pass


class EmptyResult(ComputationError):
    pass


class EmptySelection(ComputationError):
    pass


class EmptyClass(ComputationError):
    pass


class OverdrawnSelection(ComputationError):
    pass


class ConstantInput(ComputationError):
    pass


class ZeroVariance(ComputationError):
    pass


class DegenerateX(ComputationError):
    pass


class NoSelectedDates(ComputationError):
    pass


class TooFewDates(ComputationError):
    pass


class InsufficientTailData(ComputationError):
    pass


class InsufficientCrossSection(ComputationError):
    pass
