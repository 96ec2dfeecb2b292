"""Numba acceleration shim.

Hot kernels in :mod:`surfscan.kernels` are decorated with ``njit`` from this
module.  When numba is installed and the environment variable
``SURFSCAN_NUMBA`` is not set to ``0``/``false``/``off``, kernels are
JIT-compiled (with an on-disk cache).  Otherwise the same source runs as
plain Python over numpy arrays, which is slow but dependency-free and handy
for debugging.  ``benchmarks/bench_kernels.py`` compares the two paths.
"""

import os

__all__ = ["NUMBA_ENABLED", "njit", "py_func"]


def _env_enabled() -> bool:
    return os.environ.get("SURFSCAN_NUMBA", "1").strip().lower() not in (
        "0",
        "false",
        "off",
        "no",
    )


NUMBA_ENABLED = _env_enabled()

if NUMBA_ENABLED:
    try:
        from numba import njit as _numba_njit
    except ImportError:
        NUMBA_ENABLED = False

if NUMBA_ENABLED:

    def njit(*args, **kwargs):
        kwargs.setdefault("cache", True)
        return _numba_njit(*args, **kwargs)

else:

    def njit(*args, **kwargs):
        # Pass-through decorator: @njit, @njit() and @njit(cache=True) all
        # return the undecorated function.
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap


def py_func(kernel):
    """Return the pure-Python implementation behind a (possibly) jitted kernel."""
    return getattr(kernel, "py_func", kernel)
