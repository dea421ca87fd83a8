"""Kernel backend selection.

Two implementations of the hot loops exist: a compiled Cython extension
(``_core``) and a pure numpy fallback (``pyref``).  Selection happens once
at import time.  Set ``RUMORNET_KERNELS`` to ``cython`` or ``python`` to
force a backend; ``auto`` (the default) prefers the compiled one.
"""

import os

from . import pyref

_choice = os.environ.get("RUMORNET_KERNELS", "auto").lower()

if _choice not in ("auto", "cython", "python"):
    raise RuntimeError(
        "RUMORNET_KERNELS must be auto, cython or python, got %r" % _choice
    )

_impl = None
if _choice in ("auto", "cython"):
    try:
        from . import _core as _impl
    except ImportError:
        if _choice == "cython":
            raise RuntimeError(
                "RUMORNET_KERNELS=cython but the compiled extension is not "
                "available; build it or unset the variable"
            )
if _impl is None:
    _impl = pyref

BACKEND = _impl.BACKEND
lstm_forward = _impl.lstm_forward
lstm_backward = _impl.lstm_backward
conv3x3_forward = _impl.conv3x3_forward
conv3x3_backward = _impl.conv3x3_backward

__all__ = [
    "BACKEND",
    "lstm_forward",
    "lstm_backward",
    "conv3x3_forward",
    "conv3x3_backward",
    "pyref",
]
