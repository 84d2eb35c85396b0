"""Exception hierarchy.

Every error raised on purpose by this package derives from
:class:`SelfNormError`, so callers (and the CLI) can separate numerical
failures from programming mistakes.
"""


class SelfNormError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(SelfNormError, ValueError):
    pass


class OutOfRange(SelfNormError, ValueError):
    pass


class NotSymmetric(SelfNormError, ValueError):
    pass


class NotFactorable(SelfNormError, ArithmeticError):
    pass


class SingularDesign(SelfNormError, ArithmeticError):
    pass


class SingularRotation(SelfNormError, ArithmeticError):
    pass


class DegenerateColumn(SelfNormError, ArithmeticError):
    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f"column {column} of psi is identically zero")


class InvalidResponse(SelfNormError, ValueError):
    pass


class NoConvergence(SelfNormError, ArithmeticError):
    def __init__(self, score_norm, iterations):
        self.score_norm = score_norm
        self.iterations = iterations
        super().__init__(
            f"Newton iteration did not converge after {iterations} steps "
            f"(final max-abs score {score_norm:.3e})"
        )


class Separation(SelfNormError, ArithmeticError):
    pass


class TooFew(SelfNormError, ValueError):
    pass


class CenterOutside(SelfNormError, ValueError):
    pass


class Unbounded(SelfNormError, ArithmeticError):
    def __init__(self, direction, t_max):
        self.direction = direction
        self.t_max = t_max
        super().__init__(f"no exit found up to t_max={t_max:g} along direction {direction!r}")


class InvalidSpec(SelfNormError, ValueError):
    pass
