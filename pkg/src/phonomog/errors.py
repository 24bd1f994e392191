"""Exception and warning types raised across the package."""


class PhonomogError(Exception):
    """Base class for all package errors."""


class SymmetryError(PhonomogError):
    """A tensor lacks a symmetry required by the requested operation."""


class SingularLatticeError(PhonomogError):
    """A lattice (or transform) matrix is singular or numerically degenerate."""


class MaterialError(PhonomogError):
    """A material or stiffness field is not positive definite."""


class IntegrationError(PhonomogError):
    """The resolvent/matricant integration failed or is not accurate enough."""


class MemoryGuardError(PhonomogError):
    """A requested truncation would build a matrix above the configured cap."""


class ConfigError(PhonomogError):
    """A run configuration could not be parsed or validated."""


class PhonomogWarning(UserWarning):
    """Recoverable numerical issue; promoted to an error by ``--strict``."""
