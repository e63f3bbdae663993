"""Failure taxonomy.

Every failure mode callers may want to branch on gets its own class, so
"the requested target cannot be met" is never confused with "the solver
broke" or with a plain bad argument.
"""


class DomainError(ValueError):
    """An argument violates a precondition (non-positive distance, zero vector, ...)."""


class InfeasibleTarget(ValueError):
    """The requested operating point lies outside the feasible region."""


class UnstableLoop(Exception):
    """The closed loop is not mean-square stable; no finite steady state exists."""


class SolverFailure(RuntimeError):
    """An iterative solver stopped without meeting its residual targets."""


class QuadratureError(RuntimeError):
    """Numerical integration failed to reach the requested error bound."""

    def __init__(self, message: str, achieved_error: float):
        super().__init__(f"{message} (achieved error estimate {achieved_error:.3e})")
        self.achieved_error = achieved_error
