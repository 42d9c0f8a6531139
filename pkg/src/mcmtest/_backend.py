"""Select the kernel implementation at import time.

The compiled Cython module is preferred.  Set ``MCMTEST_BACKEND=python`` to
force the numpy fallback (used by the benchmark and the cross-check tests).
"""

from __future__ import annotations

import os

from . import _pykernels

python_kernels = _pykernels

try:
    from . import _kernels as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None

if os.environ.get("MCMTEST_BACKEND", "").lower() == "python" or compiled_kernels is None:
    kernels = _pykernels
    BACKEND = "python"
else:
    kernels = compiled_kernels
    BACKEND = "cython"

__all__ = ["BACKEND", "kernels", "compiled_kernels", "python_kernels"]
