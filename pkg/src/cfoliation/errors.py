"""Exception classes raised across the package."""


class CfoliationError(Exception):
    """Base class for all package errors."""


class ExprSyntaxError(CfoliationError):
    def __init__(self, message, offset, text=""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")


class UnknownIdentifierError(CfoliationError):
    def __init__(self, token, offset):
        self.token = token
        self.offset = offset
        super().__init__(f"unknown identifier {token!r} at offset {offset}")


class DomainError(CfoliationError, ArithmeticError):
    """An expression is not smooth (or not finite) at the evaluation point."""

    def __init__(self, message, node=None, point=None):
        self.node = node
        self.point = point
        where = "" if point is None else f" at point {tuple(float(x) for x in point)}"
        super().__init__(f"{message}{where}")


class UnboundParameterError(CfoliationError, KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"parameter {name!r} has no value")

    def __str__(self):
        return self.args[0]


class JetOrderError(CfoliationError, ValueError):
    """Not enough derivative data, or mismatched jet orders/dimensions."""


class VarianceError(CfoliationError, ValueError):
    """Slot variance or slot index mismatch in a tensor operation."""


class SingularMetricError(CfoliationError):
    pass


class DegenerateDistributionError(CfoliationError):
    pass


class RankDeficientError(DegenerateDistributionError):
    pass


class InvolutivityError(CfoliationError):
    def __init__(self, message, point=None, witness=None):
        self.point = point
        self.witness = witness
        extra = ""
        if point is not None:
            extra = f" at point {tuple(float(x) for x in point)}"
        if witness is not None:
            extra += f" (witness {tuple(witness)})"
        super().__init__(message + extra)


class ConfigError(CfoliationError):
    def __init__(self, message, key=None):
        self.key = key
        prefix = f"[{key}] " if key else ""
        super().__init__(prefix + message)
