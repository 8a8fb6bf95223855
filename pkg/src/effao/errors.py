"""Exception types shared across the package."""


class EffaoError(Exception):
    pass


class PrecisionExhausted(EffaoError):
    """Ball arithmetic could not certify a decision at the allowed precision."""


class OutOfDomain(EffaoError, ValueError):
    pass


class SingularLocus(EffaoError, ArithmeticError):
    """A point lies (or may lie) on the singular locus y*(y-1728)*y' = 0."""


class SingularityApproached(SingularLocus):
    pass


class NotADiscriminant(EffaoError, ValueError):
    pass


class SizeCapExceeded(EffaoError):
    pass


class ZeroPolynomial(EffaoError, ValueError):
    pass


class NonIntegerSectionPoint(EffaoError, ValueError):
    pass


class DimensionMismatch(EffaoError, ValueError):
    pass


class NotDnd(EffaoError, ValueError):
    pass


class NotHdnd(EffaoError, ValueError):
    pass


class ZeroLeadingCoefficient(EffaoError, ValueError):
    pass


class DominanceFailure(EffaoError):
    """No conductor bound exists: the leading term never dominates."""


class ParseError(EffaoError, ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position
