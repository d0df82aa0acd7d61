"""Propagation-kernel backend selection.

The compiled core (``molgate._core``, Cython + BLAS/LAPACK) is used when
it imported successfully; otherwise the pure-NumPy reference kernels
take over. Set ``MOLGATE_BACKEND=pure`` or ``=compiled`` to force a
choice (forcing ``compiled`` raises if the extension is unavailable).
"""
import os

from . import _ref

try:
    from . import _core
except ImportError:
    _core = None

_HAVE_COMPILED = _core is not None


def _select():
    forced = os.environ.get("MOLGATE_BACKEND", "").strip().lower()
    if forced == "pure":
        return _ref, "pure"
    if forced == "compiled":
        if not _HAVE_COMPILED:
            raise ImportError(
                "MOLGATE_BACKEND=compiled but molgate._core is not built"
            )
        return _core, "compiled"
    if forced:
        raise ValueError(f"unknown MOLGATE_BACKEND value {forced!r}")
    if _HAVE_COMPILED:
        return _core, "compiled"
    return _ref, "pure"


kernels, BACKEND_NAME = _select()


def have_compiled():
    return _HAVE_COMPILED


def backend_name():
    return BACKEND_NAME
