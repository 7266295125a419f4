"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class DDLabError(Exception):
    exit_code = 1


class ParseError(DDLabError):
    exit_code = 2


class PreconditionError(DDLabError, ValueError):
    exit_code = 3


class BudgetExceeded(DDLabError):
    """Raised when a computation would exceed the configured memory budget."""

    exit_code = 5

    def __init__(self, what, required, budget):
        self.required = int(required)
        self.budget = int(budget)
        super().__init__(f"{what}: needs ~{self.required} bytes, budget is {self.budget}")


class TheoremViolation(DDLabError):
    """An inequality or identity that must hold exactly did not."""

    exit_code = 4
