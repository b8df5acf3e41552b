from typing import Optional


class IsorkError(Exception):
    """Base error. `exit_code` is what the CLI returns when this escapes a command."""

    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class DimensionMismatch(IsorkError, ValueError):
    pass


class SingularFactorError(IsorkError, ArithmeticError):
    """Id - xi/2 (or Id + xi/2) is numerically singular: the step is too large."""


class EigensolverFailure(IsorkError, ArithmeticError):
    pass


class TableauError(IsorkError, ValueError):
    exit_code = 2


class ConfigError(IsorkError, ValueError):
    exit_code = 2

    def __init__(self, detail: str, line: Optional[int] = None, field: Optional[str] = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        if where:
            detail = f"{', '.join(where)}: {detail}"
        super().__init__(detail)
        self.line = line
        self.field = field


class NonConvergence(IsorkError, RuntimeError):
    """The stage fixed-point iteration did not reach its tolerance."""

    exit_code = 3

    def __init__(self, iters: int, residual: float, step: Optional[int] = None):
        self.iters = iters
        self.residual = residual
        self.step = step
        super().__init__(self._describe())

    def _describe(self) -> str:
        msg = f"stage solve did not converge after {self.iters} iterations (residual {self.residual:.3e})"
        if self.step is not None:
            msg = f"step {self.step}: {msg}"
        return msg

    def at_step(self, step: int) -> "NonConvergence":
        return NonConvergence(self.iters, self.residual, step=step)
