"""Kernel backend selection.

The compiled extension is preferred when importable; the NumPy fallback
is used otherwise, or when PNNDT_PURE_PY is set in the environment.
"""

import os

from pnndt import _kernels_py

try:
    from pnndt import _speedups
except ImportError:  # pragma: no cover - depends on build environment
    _speedups = None

HAVE_SPEEDUPS = _speedups is not None

if HAVE_SPEEDUPS and not os.environ.get("PNNDT_PURE_PY"):
    kernels = _speedups
else:
    kernels = _kernels_py


def backend_name():
    return "compiled" if kernels is _speedups else "numpy"
