"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DegenerateError(ArithmeticError):
    """A denominator or normalisation vanished (e.g. a zero Fresnel denominator)."""


class RegionMismatchError(ValueError):
    """A point does not lie in the region named by a Green-tensor label."""


class IllPosedError(ArithmeticError):
    """A mode-by-mode inversion broke down (free kernel underflowed)."""


class NonConvergence(RuntimeError):
    """An iterative or adaptive procedure ran out of budget.

    The best available estimate and an error bound are attached so callers
    can decide whether to use them anyway.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
