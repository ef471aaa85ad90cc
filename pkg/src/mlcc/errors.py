"""Exception types shared across the package."""

from __future__ import annotations

import time


class MLCCError(Exception):
    """Base class for all package errors."""


class InstanceFormatError(MLCCError, ValueError):
    """Raised when an instance or edge-list file cannot be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ModeError(MLCCError, ValueError):
    """Raised when an algorithm is applied to an instance of the wrong mode."""


class InfeasibleLP(MLCCError):
    """The linear program has no feasible point."""


class UnboundedLP(MLCCError):
    """The linear program is unbounded below."""


class NotConverged(MLCCError):
    """An iterative solver hit its iteration cap.

    ``best`` carries the best feasible result found so far and ``residual`` the
    remaining gap or constraint violation.
    """

    def __init__(self, message: str, best=None, residual: float = float("nan")):
        super().__init__(message)
        self.best = best
        self.residual = residual


class CertificateError(MLCCError, AssertionError):
    """A proven approximation inequality failed on a concrete run."""


class SolverTimeout(MLCCError):
    """A cooperative deadline expired between solver iterations."""


class Deadline:
    """Wall-clock budget checked cooperatively by the solvers."""

    def __init__(self, seconds: float | None):
        self.seconds = seconds
        self.start = time.perf_counter()

    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    def expired(self) -> bool:
        return self.seconds is not None and self.elapsed() > self.seconds

    def check(self) -> None:
        if self.expired():
            raise SolverTimeout(f"exceeded {self.seconds} s")


def check_deadline(deadline: Deadline | None) -> None:
    if deadline is not None:
        deadline.check()
