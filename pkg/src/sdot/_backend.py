"""Kernel backend selection.

The compiled extension ``sdot._core`` is used when it imported cleanly;
otherwise the pure-Python kernels take over.  Set ``SDOT_BACKEND=python`` to
force the fallback (useful for benchmarking and debugging).
"""

import logging
import os

from . import _purekernels

log = logging.getLogger("sdot")

_forced = os.environ.get("SDOT_BACKEND", "").lower()

if _forced in ("python", "pure"):
    kernels = _purekernels
elif _forced in ("", "c", "compiled", "cython"):
    try:
        from . import _core as kernels  # type: ignore[no-redef]
    except ImportError:
        if _forced:
            raise
        log.info("compiled kernels unavailable, using pure-Python fallback")
        kernels = _purekernels
else:
    raise ValueError(f"unknown SDOT_BACKEND value: {_forced!r}")

DOMAIN_TAG = _purekernels.DOMAIN_TAG


def backend_name() -> str:
    """Name of the active kernel backend ('compiled' or 'python')."""
    return kernels.BACKEND_NAME
