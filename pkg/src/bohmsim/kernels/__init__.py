"""Kernel backend selection.

The compiled extension is preferred when it imports; set the environment
variable ``BOHMSIM_PURE_PYTHON=1`` to force the numpy fallback. Both
backends expose the same three functions with identical semantics.
"""

import os

from . import reference

if os.environ.get("BOHMSIM_PURE_PYTHON"):
    _impl = reference
else:
    try:
        from . import _native as _impl
    except ImportError:
        _impl = reference

BACKEND = _impl.BACKEND
interp_cubic_1d = _impl.interp_cubic_1d
interp_cubic_2d = _impl.interp_cubic_2d
thomas_solve = _impl.thomas_solve


def available_backends():
    """Importable backend modules, keyed by name."""
    found = {reference.BACKEND: reference}
    try:
        from . import _native
        found[_native.BACKEND] = _native
    except ImportError:
        pass
    return found
