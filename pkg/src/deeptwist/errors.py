"""Exception types shared across the package."""


class FormatError(ValueError):
    """A file does not follow its documented binary/text format."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class NumericalError(ArithmeticError):
    """An iterative numerical procedure failed (non-convergence, non-finite)."""


class RatioInfeasibleError(ValueError):
    """No rank >= 1 reaches the requested compression ratio."""

    def __init__(self, target_ratio, best_ratio):
        super().__init__(
            f"target compression ratio {target_ratio:g} is infeasible; "
            f"best achievable at rank 1 is {best_ratio:g}"
        )
        self.target_ratio = target_ratio
        self.best_ratio = best_ratio
