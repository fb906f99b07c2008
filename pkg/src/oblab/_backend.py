"""Kernel backend selection: compiled extension if available, numpy fallback.

Set OBLAB_KERNELS=cython or OBLAB_KERNELS=python to force a backend.
"""

import os

_choice = os.environ.get("OBLAB_KERNELS", "auto").lower()

if _choice == "python":
    from . import _kernels_py as kernels
    BACKEND = "python"
elif _choice == "cython":
    from . import _kernels as kernels  # noqa: F401
    BACKEND = "cython"
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]
        BACKEND = "python"

shift_sum = kernels.shift_sum
tau_increment = kernels.tau_increment
grad_increment = kernels.grad_increment
