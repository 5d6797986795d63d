"""Hot kernels for hyperspherical transforms.

The compiled extension ``_kernels`` is used when it was built; otherwise the
numpy implementation in ``_fallback`` is loaded. Setting the environment
variable ``DUALKG_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _fallback

BACKEND = "python"
if os.environ.get("DUALKG_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
else:
    _impl = _fallback

mpc = _impl.mpc
mcp = _impl.mcp
rotate = _impl.rotate
rotate_vjp = _impl.rotate_vjp
wrap_angles = _fallback.wrap_angles

__all__ = ["BACKEND", "mpc", "mcp", "rotate", "rotate_vjp", "wrap_angles"]
