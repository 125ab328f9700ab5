"""Hot-loop kernels, compiled when available.

The Cython extension ``_core`` is used when it imports; otherwise the numpy
versions in ``_pure`` are used. Set ``LOWDIM_MAXCUT_PURE=1`` to force the
fallback. ``BACKEND`` names the active implementation.
"""
import os

from . import _pure

if os.environ.get("LOWDIM_MAXCUT_PURE"):
    _impl = _pure
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _pure

BACKEND = "pure" if _impl is _pure else "compiled"

maxcut_enumerate = _impl.maxcut_enumerate
triangle_terms = _impl.triangle_terms
triangle_violations = _impl.triangle_violations
local_improve_batch = _impl.local_improve_batch
sign_moment_sums = _impl.sign_moment_sums


def implementations():
    """Map backend name to kernel module, for cross-checks and benchmarks."""
    impls = {"pure": _pure}
    try:
        from . import _core

        impls["compiled"] = _core
    except ImportError:
        pass
    return impls
