"""Backend selection for the GP evaluation kernels.

The compiled Cython kernels are preferred when the extension built; the
numpy fallback is semantically identical. PAWSR_PURE_PYTHON=1 in the
environment forces the fallback, set_backend() switches at runtime (used by
the parity tests and the benchmark).
"""

import os

from . import _gpcore_py

try:
    from . import _gpcore as _compiled
except ImportError:
    _compiled = None

if _compiled is not None and not os.environ.get("PAWSR_PURE_PYTHON"):
    _active = _compiled
else:
    _active = _gpcore_py


def compiled_available() -> bool:
    return _compiled is not None


def backend_name() -> str:
    return _active.BACKEND


def get_backend():
    """Module providing barrier_value / barrier_full."""
    return _active


def set_backend(name: str):
    """Switch between 'cython' and 'python' kernels. Returns the old name."""
    global _active
    old = _active.BACKEND
    if name == "python":
        _active = _gpcore_py
    elif name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        _active = _compiled
    else:
        raise ValueError(f"unknown backend {name!r}")
    return old
