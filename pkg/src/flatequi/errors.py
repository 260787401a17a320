"""Exception types raised across the package."""


class FlatequiError(Exception):
    pass


# surface construction and the GL+(2,R) action
class GluingMismatch(FlatequiError, ValueError):
    pass


class NonSimplePolygon(FlatequiError, ValueError):
    pass


class AngleDefect(FlatequiError, ValueError):
    pass


class InvalidSurface(FlatequiError, ValueError):
    pass


class SingularMatrix(FlatequiError, ValueError):
    pass


class FlipLimitExceeded(FlatequiError, RuntimeError):
    pass


# homology and cocycles
class DegenerateFrame(FlatequiError, ArithmeticError):
    pass


class UnknownEdge(FlatequiError, KeyError):
    pass


# saddle connections and norms
class BudgetExceeded(FlatequiError, RuntimeError):
    pass


class EmptyConnectionSet(FlatequiError, ValueError):
    pass


class StepOutsideChart(FlatequiError, ValueError):
    pass


# unstable leaf charts
class DegenerateDeformation(FlatequiError, ArithmeticError):
    pass


class OutsideBox(FlatequiError, ValueError):
    pass


class RadiusTooLarge(FlatequiError, ValueError):
    pass


class SearchExhausted(FlatequiError, RuntimeError):
    pass


# measures and estimators
class BadParams(FlatequiError, ValueError):
    pass


class NotReciprocalInteger(FlatequiError, ValueError):
    pass


class MethodMismatch(FlatequiError, ValueError):
    pass


class InsufficientPoints(FlatequiError, ValueError):
    pass


# configuration
class ParseError(FlatequiError, ValueError):
    def __init__(self, message, line=None, section=None):
        super().__init__(message)
        self.line = line
        self.section = section


class ValidationError(FlatequiError, ValueError):
    """``field`` names the violated invariant (``str(exc)`` starts with it)."""

    def __init__(self, field, detail=""):
        super().__init__(field if not detail else f"{field}: {detail}")
        self.field = field


class StageError(FlatequiError, RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
