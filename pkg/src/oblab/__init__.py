"""Energy-budget laboratory for wall-bounded 2D incompressible flow."""

from ._backend import BACKEND as kernel_backend  # noqa: F401

__version__ = "0.1.0"
