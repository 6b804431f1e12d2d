"""Exception hierarchy shared by the solver, the expression language and the CLI."""

from __future__ import annotations


class HilferError(Exception):
    """Base class for all package errors."""


class ExprError(HilferError):
    """Base class for right-hand-side expression errors."""


class ExprLexError(ExprError):
    def __init__(self, message: str, pos: int) -> None:
        super().__init__(f"{message} at offset {pos}")
        self.pos = pos


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, pos: int, expected: frozenset[str] = frozenset()) -> None:
        detail = f"{message} at offset {pos}"
        if expected:
            detail += f" (expected one of: {', '.join(sorted(expected))})"
        super().__init__(detail)
        self.pos = pos
        self.expected = expected


class ExprDomainError(ExprError, ValueError):
    """Evaluation left the real domain (log of non-positive, 0^negative, ...).

    ``subexpr`` is the pretty-printed offending subexpression, ``t`` and ``x``
    the first offending argument pair when known.
    """

    def __init__(self, reason: str, subexpr: str, t: float | None = None, x: float | None = None) -> None:
        msg = f"{reason} in '{subexpr}'"
        if t is not None:
            msg += f" at t={t!r}, x={x!r}"
        super().__init__(msg)
        self.reason = reason
        self.subexpr = subexpr
        self.t = t
        self.x = x


class ConfinementError(HilferError):
    """A Picard iterate left the tube |y - x0| <= b."""

    def __init__(self, t: float, deviation: float, b: float, iteration: int) -> None:
        super().__init__(
            f"iterate {iteration} left the tube E at t={t!r}: |y - x0| = {deviation!r} > b = {b!r}"
        )
        self.t = t
        self.deviation = deviation
        self.b = b
        self.iteration = iteration


class NonConvergenceError(HilferError):
    """The stopping rule was not met within ``max_iter`` steps."""

    def __init__(self, message: str, report=None) -> None:
        super().__init__(message)
        self.report = report


class DegenerateLipschitzError(HilferError, ValueError):
    """Sampled Lipschitz constant is zero: the right-hand side does not depend on x."""


class ConfigError(HilferError):
    pass
