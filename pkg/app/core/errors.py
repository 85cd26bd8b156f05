"""
Toolkit Errors
Exception hierarchy carrying the process exit code of each failure class
"""

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PRECONDITION = 3
EXIT_GOLDEN_MISMATCH = 4
EXIT_INTERNAL = 70


class ToolkitError(Exception):
    """Base error; exit_code is what the command line returns"""

    exit_code = EXIT_INTERNAL

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class PreconditionError(ToolkitError):
    """An argument violates an operation's precondition"""

    exit_code = EXIT_PRECONDITION


class DomainOverflowError(PreconditionError):
    """A computed quantity leaves the 64-bit integer domain"""


class MemoryBudgetError(PreconditionError):
    """The occurrence bitset would exceed the memory budget"""

    def __init__(self, size_bytes: int, budget_bytes: int):
        super().__init__(
            f"occurrence bitset needs {size_bytes} bytes, budget is {budget_bytes} bytes "
            f"(raise ECG_MEM_BUDGET_BYTES or use --strategy direct)"
        )
        self.size_bytes = size_bytes
        self.budget_bytes = budget_bytes


class SieveHypothesisError(PreconditionError):
    """rho(l) > min(2, l - 1) for some prime l"""

    def __init__(self, ell: int, rho_value: int):
        super().__init__(f"sieve hypothesis violated at l={ell}: rho(l)={rho_value}")
        self.ell = ell
        self.rho_value = rho_value


class GoldenMismatchError(ToolkitError):
    """A re-run experiment differs from its blessed golden file"""

    exit_code = EXIT_GOLDEN_MISMATCH


class ConsistencyError(ToolkitError):
    """Internal invariant broken; always a bug"""

    exit_code = EXIT_INTERNAL
