"""Pair-sum kernels with a compiled backend and a pure numpy fallback.

The compiled module is picked at import when it is available. Setting
``LANDAU_LAB_FORCE_PYTHON=1`` forces the fallback; ``LANDAU_LAB_THREADS``
caps the worker count of both the compiled loops and the FFTs.
"""
from __future__ import annotations

import os


def thread_count() -> int:
    raw = os.environ.get("LANDAU_LAB_THREADS")
    n = os.cpu_count() or 1
    if raw:
        try:
            n = max(1, min(n, int(raw)))
        except ValueError:
            pass
    return n


from . import _pairsum_py  # noqa: E402

backend = _pairsum_py
BACKEND_NAME = "python"
if os.environ.get("LANDAU_LAB_FORCE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _pairsum as backend  # type: ignore[no-redef]

        BACKEND_NAME = "compiled"
    except ImportError:
        pass


def get_backend(name: str | None = None):
    """Return the backend module by name (``"compiled"``, ``"python"``) or the active one."""
    if name is None:
        return backend
    if name == "python":
        return _pairsum_py
    if name == "compiled":
        from . import _pairsum

        return _pairsum
    raise ValueError(f"unknown backend {name!r}")


def call(fn: str, *args, backend_name: str | None = None):
    mod = get_backend(backend_name)
    if mod is _pairsum_py:
        return getattr(mod, fn)(*args)
    return getattr(mod, fn)(*args, thread_count())
