"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, NumericError -> 3,
ScaleError / ResolutionError -> 4.
"""


class OblabError(Exception):
    """Base class for package errors."""


class ConfigError(OblabError, ValueError):
    """Invalid configuration or argument outside its documented domain."""


class ScaleError(OblabError, ValueError):
    """Filter/cutoff scales violate the admissibility chain (ell < h/4 etc.)."""


class ResolutionError(ScaleError):
    """A requested scale is not resolvable on the grid (ell < 2*dx)."""


class NumericError(OblabError, RuntimeError):
    """Numerical failure: CFL violation, solver non-convergence, divergence."""
