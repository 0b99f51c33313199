"""Backend selection for the hot kernels.

The compiled extension is used when it was built and imports cleanly;
otherwise the numpy implementation is used.  Set ``CQMETA_PURE_PYTHON=1``
to force the fallback.
"""

import os

from . import _kernels_py

_compiled = None
if os.environ.get("CQMETA_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

_active = _compiled if _compiled is not None else _kernels_py


def backend_name():
    return _active.BACKEND


def use_backend(name):
    """Switch the active backend ("cython" or "python"); returns the previous name."""
    global _active
    if name not in BACKENDS:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}")
    previous = _active.BACKEND
    _active = BACKENDS[name]
    return previous


def threshold_stats(stacks0, stacks1, t, rel_tol, abs_tol):
    return _active.threshold_stats(stacks0, stacks1, float(t), rel_tol, abs_tol)


def fixed_point(R, Pi, n_iter, rel_tol, abs_tol):
    return _active.fixed_point(R, Pi, int(n_iter), rel_tol, abs_tol)
