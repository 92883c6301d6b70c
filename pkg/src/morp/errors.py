"""Exception types shared across the package."""

from __future__ import annotations

from dataclasses import dataclass


class MorpError(Exception):
    """Base class for all errors raised by morp."""


class EigenFailure(MorpError):
    """An eigenvalue routine did not converge."""


class DomainError(MorpError, ValueError):
    """An argument lies outside the supported domain."""


class Infeasible(MorpError):
    """A linear matrix equation has no solution within tolerance.

    The least-squares candidate is kept on the exception so callers can
    inspect how far from feasible the data is.
    """

    def __init__(self, residual: float, tolerance: float, x=None, u=None):
        self.residual = residual
        self.tolerance = tolerance
        self.x = x
        self.u = u
        super().__init__(f"infeasible: residual {residual:.3e} > tolerance {tolerance:.3e}")


class NotStabilizable(MorpError):
    pass


class CareFailure(MorpError):
    """The Riccati solve failed or its gain did not stabilize the plant."""


class ConfigError(MorpError, ValueError):
    pass


class NotApplicable(MorpError):
    pass


@dataclass(frozen=True)
class Failure:
    """One violated solvability condition.

    ``follower`` is the zero-based follower index, or None for
    graph-level conditions.
    """

    which: str
    follower: int | None = None
    detail: str = ""

    def as_dict(self) -> dict:
        return {"which": self.which, "follower": self.follower, "detail": self.detail}


class ConditionFailed(MorpError):
    """Aggregated report of every condition a design attempt violated."""

    def __init__(self, failures: list[Failure]):
        self.failures = list(failures)
        lines = ", ".join(
            f.which if f.follower is None else f"{f.which}[{f.follower}]" for f in self.failures
        )
        super().__init__(f"conditions failed: {lines}")

    def which(self) -> set[str]:
        return {f.which for f in self.failures}
