"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """A configuration point lies outside the domain of the chart it was used with."""


class RegularityError(RuntimeError):
    """A matrix that the theory requires to be invertible is (numerically) singular.

    Carries a condition-number estimate in ``condition`` when available.
    """

    def __init__(self, message: str, condition: float | None = None):
        super().__init__(message)
        self.condition = condition


class NewtonError(RuntimeError):
    """Newton iteration failed to reach the requested residual tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ShootingError(NewtonError):
    """Boundary-value shooting failed; ``residual`` is the endpoint mismatch."""


class ConsistencyError(RuntimeError):
    """Two expressions that must agree on a valid trajectory disagree.

    ``index`` names the offending lattice point.
    """

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class IntegrationError(RuntimeError):
    """A trajectory march aborted.  Carries the partial trajectory and failing index."""

    def __init__(self, message: str, partial=None, index: int | None = None):
        super().__init__(message)
        self.partial = partial
        self.index = index


class ConfigError(ValueError):
    """An experiment configuration failed validation; ``field`` is the JSON path."""

    def __init__(self, message: str, field: str = ""):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
