"""Exception types shared across the package."""


class HydrobalError(Exception):
    """Base class for package-specific errors."""


class ValidationError(HydrobalError):
    """Input data violates a documented invariant.

    Carries the full violation list so callers can report all problems at once.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class InfeasibleProblem(HydrobalError):
    """The optimization problem has no feasible point.

    `constraint_class` names the first violated constraint family
    (e.g. "reservoir_balance", "load") as seen by the LP relaxation.
    """

    def __init__(self, message, constraint_class=None):
        self.constraint_class = constraint_class
        super().__init__(message)


class UnboundedProblem(HydrobalError):
    """The LP objective can be improved without limit."""


class SolverNumericsError(HydrobalError):
    """The simplex iteration limit was hit or the basis became unusable."""


class ConfigError(HydrobalError):
    """Run configuration is missing files or holds out-of-range parameters."""
