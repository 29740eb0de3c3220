"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A configuration or decay-profile invariant is violated."""


class DomainError(ValueError):
    """A function was called outside the range where it is defined."""


class TreeTooLargeError(RuntimeError):
    """Enumerating the requested combinatorial tree would exceed the budget."""

    def __init__(self, k: int, p: int, count: int, budget: int):
        self.k, self.p, self.count, self.budget = k, p, count, budget
        super().__init__(
            f"tree too large: N_{k} = {count} nodes for p={p} exceeds budget {budget}"
        )


class ConvergenceError(RuntimeError):
    """Picard iteration did not reach the fixed-point tolerance."""

    def __init__(self, message: str, history: list[float]):
        self.history = list(history)
        super().__init__(f"{message}; sup-difference history: {self.history}")


class EnvelopeViolationError(RuntimeError):
    """An iterate exceeded the guaranteed decay envelope inside the horizon."""


class BlowUpError(RuntimeError):
    """Time stepping produced non-finite values."""

    def __init__(self, step: int, time: float):
        self.step, self.time = step, time
        super().__init__(f"non-finite values at step {step} (t = {time!r})")
