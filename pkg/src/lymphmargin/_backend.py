"""Kernel backend selection.

Hot loops run through numba when it is importable. Setting the environment
variable ``LYMPHMARGIN_DISABLE_NUMBA=1`` (read at import time) forces the
vectorized numpy implementations instead. Both backends return bit-identical
results; the numpy path exists for portability and as a cross-check.
"""
import os
from contextlib import contextmanager

ENV_FLAG = "LYMPHMARGIN_DISABLE_NUMBA"

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

BACKENDS = ("numba", "numpy")


def _env_disabled() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


_active = "numba" if HAVE_NUMBA and not _env_disabled() else "numpy"


def active() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _active = name


@contextmanager
def using_backend(name: str):
    """Temporarily switch the kernel backend (used by tests and benchmarks)."""
    previous = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)
