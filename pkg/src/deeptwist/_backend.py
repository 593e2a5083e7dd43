"""Compute-backend selection for the hot kernels.

Two implementations exist for each hot inner loop (Jacobi SVD sweeps,
im2col, direct convolution forward/backward): explicit loops compiled
with numba, and a vectorized pure-numpy twin. The active one is picked
at import time from the DEEPTWIST_BACKEND environment variable:

    DEEPTWIST_BACKEND=numba   require numba (error if missing)
    DEEPTWIST_BACKEND=numpy   pure numpy, no compilation
    unset / auto              numba when importable, else numpy

Both paths compute the same quantities; they may differ in the last
bits because accumulation order differs. ``benchmarks/bench_backends.py``
times them side by side.
"""

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

_choice = os.environ.get("DEEPTWIST_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"DEEPTWIST_BACKEND must be 'numba', 'numpy' or 'auto', got {_choice!r}"
    )
if _choice == "numba" and not HAVE_NUMBA:
    raise ImportError("DEEPTWIST_BACKEND=numba but numba is not importable")

USE_NUMBA = HAVE_NUMBA if _choice == "auto" else _choice == "numba"

BACKEND = "numba" if USE_NUMBA else "numpy"


def jit(func):
    """numba.njit when numba is importable, identity otherwise.

    Compilation is lazy (first call), so importing the package stays fast.
    fastmath stays off: kernel results must be deterministic for fixed
    input bits.
    """
    if HAVE_NUMBA:
        return numba.njit(cache=True)(func)
    return func


def select(numba_impl, numpy_impl):
    """Pick the active implementation of a hot kernel pair."""
    return numba_impl if USE_NUMBA else numpy_impl
