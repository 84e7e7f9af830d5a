"""Numerical kernels with a compiled fast path.

The Cython extension is optional.  When it failed to build (or was never
built) the pure-numpy implementations take over; everything above this
package sees the same two callables either way.

Set ``QDEXCITON_FORCE_PYTHON=1`` in the environment to skip the compiled
module even when it is importable.  Useful for benchmarking and for
debugging suspected kernel mismatches.
"""

import os

if os.environ.get("QDEXCITON_FORCE_PYTHON", "") not in ("", "0"):
    from . import _pykernels as _impl

    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        from . import _pykernels as _impl

        BACKEND = "python"

design_matrix = _impl.design_matrix
rk4_drive = _impl.rk4_drive

__all__ = ["BACKEND", "design_matrix", "rk4_drive"]
