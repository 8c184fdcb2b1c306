"""Exception types raised across the package."""


class CurveError(ValueError):
    """A curve violates a precondition (domain, concavity, endpoints)."""


class RootFindingError(ArithmeticError):
    """Bisection did not reach the requested residual."""


class TreeValidationError(ValueError):
    """A tree fails validation. ``violations`` holds the individual failures."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "\n".join(f"  {v}" for v in self.violations[:20])
        more = len(self.violations) - 20
        if more > 0:
            lines += f"\n  ... and {more} more"
        super().__init__(f"invalid tree ({len(self.violations)} violations):\n{lines}")


class RuleError(ValueError):
    """A stopping rule is malformed for the tree it is applied to."""


class UsageError(ValueError):
    """Arguments are out of an operation's domain (bad kind, even n, trials = 0)."""
