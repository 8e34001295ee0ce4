"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: ConfigError -> 1, ConvergenceError -> 2,
SingularityError -> 3.
"""


class RamanlinkError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RamanlinkError):
    """Link description is syntactically or semantically invalid."""


class ConvergenceError(RamanlinkError):
    """The power-evolution relaxation failed to converge."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class SingularityError(RamanlinkError):
    """Closed-form model is singular (near-zero effective dispersion)."""


class FitError(RamanlinkError):
    """Loss-profile fit could not be performed (ill-conditioned basis)."""
