"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed arguments: wrong dimension, non-positive step, bad config."""


class DomainError(ValueError):
    """A point lies outside the domain where a function is defined."""


class ComputationError(ArithmeticError):
    """A numerical routine produced non-finite output despite safeguards."""


class ContractViolation(RuntimeError):
    """A caller broke a documented precondition."""


class InfeasibleError(RuntimeError):
    """No feasible point was found."""


class BudgetExhausted(RuntimeError):
    """The step cap was hit before the required number of productive steps.

    The partial run is attached as ``report`` so it can still be inspected
    or written out.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
