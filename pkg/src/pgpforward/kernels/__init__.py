"""Kernel backend selection.

The hot path (x-only scalar multiplication over GF(2^255 - 19)) is served
by one of two interchangeable backends:

* ``numba``  -- per-element @njit kernels, parallel batches (default)
* ``numpy``  -- batch-vectorized pure numpy, used as fallback

Selection: set ``PGPFORWARD_BACKEND=numpy`` (or ``numba``) in the
environment before import.  Unset, the numba backend is used when numba
imports cleanly, otherwise numpy.  ``benchmarks/bench_kernels.py`` compares
the two.
"""

from __future__ import annotations

import os
from types import ModuleType

_ENV_VAR = "PGPFORWARD_BACKEND"


def load_backend(name: str) -> ModuleType:
    if name == "numpy":
        from . import backend_numpy

        return backend_numpy
    if name == "numba":
        from . import backend_numba

        return backend_numba
    raise ValueError(f"unknown kernel backend {name!r} (expected numba or numpy)")


def _select() -> ModuleType:
    choice = os.environ.get(_ENV_VAR, "").strip().lower()
    if choice in ("numba", "numpy"):
        return load_backend(choice)
    if choice not in ("", "auto"):
        raise ValueError(f"{_ENV_VAR}={choice!r} not recognized")
    try:
        return load_backend("numba")
    except ImportError:
        return load_backend("numpy")


backend = _select()
backend_name: str = backend.name
ladder_batch = backend.ladder_batch
