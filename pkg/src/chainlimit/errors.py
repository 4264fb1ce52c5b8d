"""Exception types shared across the package."""


class ChainlimitError(Exception):
    """Base class for all package errors."""


class DomainError(ChainlimitError, ValueError):
    """An argument is outside the domain an operation is defined on."""


class ConfigurationError(ChainlimitError, ValueError):
    """A scenario, parameter set, or solver setting violates an invariant."""


class BudgetError(ChainlimitError, RuntimeError):
    """A run was refused because its projected cost exceeds the step budget."""


class InstabilityError(ChainlimitError, RuntimeError):
    """A deterministic iteration produced non-finite or out-of-range values."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step
