from __future__ import annotations

from pathlib import Path


class PTOscError(Exception):
    """Base class for every error raised by ptosc."""


class NonFiniteValue(PTOscError, ArithmeticError):
    pass


class DivisionByZeroJet(PTOscError, ZeroDivisionError):
    pass


class PoleError(PTOscError, ZeroDivisionError):
    """Evaluation hit a zero of s, t or sigma (a pole of 1/s)."""

    def __init__(self, point: complex, what: str = "s") -> None:
        super().__init__(f"{what}(x) vanishes at x={point!r}")
        self.point = point


class IndexTooLarge(PTOscError, ValueError):
    pass


class ConvergenceDomainError(PTOscError, ValueError):
    pass


class NonRealNorm(PTOscError, ArithmeticError):
    pass


class NoConvergence(PTOscError, ArithmeticError):
    pass


class ConfigError(PTOscError, ValueError):
    pass


class ExportError(PTOscError, OSError):
    def __init__(self, path: Path, reason: str) -> None:
        super().__init__(f"cannot write {path}: {reason}")
        self.path = path
