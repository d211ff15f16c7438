"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A configuration violates a stated invariant."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class TraceError(ValueError):
    """A probe log cannot be parsed or matched."""


class InfeasiblePlanError(RuntimeError):
    """No offset/cycle plan satisfies the determinism conditions."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition
