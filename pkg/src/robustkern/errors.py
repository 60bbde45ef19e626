"""Exception types shared across the library."""


class CapabilityError(RuntimeError):
    """Requested an operation the given loss/kernel/solution does not support."""


class CapacityError(RuntimeError):
    """Problem size exceeds a configured cap."""


class ConditioningError(RuntimeError):
    """Linear system too ill-conditioned to solve reliably."""


class ConvergenceError(RuntimeError):
    """Iterative solver failed to reach tolerance; carries the last iterate."""

    def __init__(self, message, last_solution=None):
        super().__init__(message)
        self.last_solution = last_solution
