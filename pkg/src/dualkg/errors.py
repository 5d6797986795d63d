"""Exception hierarchy for dualkg."""


class DualKGError(Exception):
    """Base class for every error raised by this package."""


class DegeneratePoint(DualKGError, ValueError):
    """A point has zero (or numerically zero) norm where a direction is needed."""


class InvalidAngle(DualKGError, ValueError):
    pass


class DimensionMismatch(DualKGError, ValueError):
    pass


class OutsideBall(DualKGError, ValueError):
    """A point handed to a Poincare-ball routine has norm >= 1."""


class NumericalDegeneracy(DualKGError, ArithmeticError):
    pass


class UnknownRelation(DualKGError, KeyError):
    pass


class SamplingExhausted(DualKGError, RuntimeError):
    """No corrupted triple outside the graph was found within the retry budget."""


class DivergenceDetected(DualKGError, FloatingPointError):
    pass


class InvalidQuery(DualKGError, ValueError):
    pass


class EmptyEvaluation(DualKGError, ValueError):
    pass


class ParseError(DualKGError, ValueError):
    def __init__(self, path, lineno, message):
        self.path = path
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


class SchemaViolation(DualKGError, ValueError):
    pass


class UnsupportedVersion(DualKGError, ValueError):
    pass


class ChecksumMismatch(DualKGError, ValueError):
    pass
