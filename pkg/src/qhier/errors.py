"""Exception types shared across the package.

The CLI maps ScenarioError to exit code 2 (unreadable input) and
ValidationError to exit code 3 (well-formed input that violates a contract).
Everything else is an ordinary bug and propagates.
"""


class ValidationError(ValueError):
    """Input violates a documented precondition.

    `field` optionally records a dotted path into the offending structure,
    e.g. "spec.K" for a non-Hermitian one-particle Hamiltonian.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class ScenarioError(ValueError):
    """Scenario file cannot be read or parsed at all."""


class TruncationError(ValidationError):
    """A series needs sequence entries beyond the stored truncation."""


class ConvergenceError(ValidationError):
    """Requested time lies outside the guaranteed convergence interval."""


class QuadratureError(RuntimeError):
    """Adaptive panel doubling failed to reach the requested tolerance."""
