"""Backend selection for the detector loops.

The compiled ``_ckernels`` extension is used when it imports; otherwise
the pure-Python ``_pykernels`` twin takes over.  Setting the environment
variable ``BETDETECT_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _pykernels

VIOL_BOUND = _pykernels.VIOL_BOUND
VIOL_FACTOR_A = _pykernels.VIOL_FACTOR_A
VIOL_FACTOR_B = _pykernels.VIOL_FACTOR_B

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def available_backends():
    names = ["python"]
    if _ckernels is not None:
        names.insert(0, "cython")
    return names


def get_backend(name=None):
    """Return the kernel module for ``name`` (``"cython"`` or ``"python"``)."""
    if name is None:
        name = BACKEND
    if name == "python":
        return _pykernels
    if name == "cython":
        if _ckernels is None:
            raise ImportError("compiled kernels are not built")
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


if _ckernels is not None and os.environ.get("BETDETECT_PURE_PYTHON", "") in ("", "0"):
    BACKEND = "cython"
else:
    BACKEND = "python"

run_simple = get_backend().run_simple
run_composite = get_backend().run_composite
