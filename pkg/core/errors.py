"""
Exception hierarchy shared by every computation.

Library code raises these; the CLI layer turns them into exit codes and a
machine-readable JSON payload.
"""

from typing import Any, Dict, Optional


class BergdistError(Exception):
    """Base class for all library errors"""

    exit_code = 1

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "exit_code": self.exit_code,
            "details": {k: _jsonable(v) for k, v in self.details.items()},
        }


class HypothesisViolation(BergdistError):
    """A theorem hypothesis (strict inequality) does not hold"""

    exit_code = 2

    def __init__(self, inequality: str, **details: Any):
        super().__init__(f"hypothesis violated: {inequality}", inequality=inequality, **details)
        self.inequality = inequality


class UnsupportedDimension(BergdistError):
    exit_code = 2

    def __init__(self, n: int):
        super().__init__(f"complex dimension n={n} is not supported (use 1 or 2)", n=n)
        self.n = n


class OutOfDomain(BergdistError):
    exit_code = 2

    def __init__(self, point: Any, domain: str):
        super().__init__(f"point {point!r} is outside the open {domain}", point=point, domain=domain)


class ConfigurationError(BergdistError):
    """A run configuration is missing what the command needs"""

    exit_code = 2


class UnboundedFunction(BergdistError):
    """Weighted sup-norm grid maximum keeps growing with the grid extent"""

    exit_code = 2


class BudgetExceeded(BergdistError):
    """Adaptive quadrature ran out of cells before meeting its tolerance"""

    exit_code = 3

    def __init__(self, max_cells: int, estimate: Any, error: float):
        super().__init__(
            f"cell budget {max_cells} exhausted (estimate={estimate}, error={error:.3e})",
            max_cells=max_cells,
            estimate=estimate,
            error=error,
        )
        self.max_cells = max_cells
        self.estimate = estimate
        self.error = error


class InsufficientLevels(BergdistError):
    exit_code = 3

    def __init__(self, available: int, required: int = 5):
        super().__init__(
            f"classification needs {required} reliable ladder levels, got {available}",
            available=available,
            required=required,
        )


class NotReproducible(BergdistError):
    """The representation integral did not classify Convergent"""

    exit_code = 4

    def __init__(self, verdict: str, message: Optional[str] = None):
        super().__init__(message or f"representation integral verdict is {verdict}", verdict=verdict)
        self.verdict = verdict


class NotConvergent(BergdistError):
    """A decomposition was requested at a level where the functional is not finite"""

    exit_code = 4

    def __init__(self, eps: float, verdict: str):
        super().__init__(f"functional at eps={eps} classified {verdict}", eps=eps, verdict=verdict)
        self.eps = eps
        self.verdict = verdict


def _jsonable(value: Any) -> Any:
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, (int, float, str, bool)) or value is None:
        return value
    return repr(value)
