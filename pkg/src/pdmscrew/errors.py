"""Exception types shared across the package."""


class PdmError(Exception):
    """Base class for every error raised by pdmscrew."""


class DomainError(PdmError, ValueError):
    """Argument outside the mathematical domain of a function."""


class ConfigError(PdmError, ValueError):
    """Malformed or inconsistent physical/CLI configuration."""


class GridError(PdmError, ValueError):
    """Sampling grid unusable for a finite-difference operation."""


class InvalidState(PdmError):
    """The requested (n_r, ell) state has no normalizable counterpart."""


class NoRootError(InvalidState):
    """Self-consistent energy search found no sign change (no bound state)."""


class ConvergenceError(PdmError, RuntimeError):
    """A numerical procedure failed to converge."""
