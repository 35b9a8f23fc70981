"""Backend selection for the hot numeric kernels.

Three kernels dominate runtime: hypergraph random walks, skip-gram
negative-sampling training, and the latent-factor fit. Each ships in two
builds: a numba @njit build and a pure-numpy build. The active build is
chosen from the SCIMETER_BACKEND environment variable ("numba" or "numpy");
when unset, numba is used if it imports. Both builds consume the same
splitmix64 random stream, so the walk kernels agree bit for bit and the
float kernels agree to rounding.
"""

import importlib
import os

_FORCED: str | None = None


def _numba_importable() -> bool:
    try:
        importlib.import_module("numba")
    except ImportError:
        return False
    return True


def active_backend() -> str:
    """Resolve the backend name, honoring force_backend() then the env flag."""
    if _FORCED is not None:
        return _FORCED
    choice = os.environ.get("SCIMETER_BACKEND", "").strip().lower()
    if choice == "numba":
        if not _numba_importable():
            raise RuntimeError("SCIMETER_BACKEND=numba but numba is not importable")
        return "numba"
    if choice == "numpy":
        return "numpy"
    if choice:
        raise RuntimeError(
            f"unknown SCIMETER_BACKEND {choice!r} (expected 'numba' or 'numpy')"
        )
    return "numba" if _numba_importable() else "numpy"


def force_backend(name: str | None) -> None:
    """Override backend selection in-process (tests and benchmarks)."""
    global _FORCED
    if name is not None and name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    _FORCED = name


def kernels(group: str, backend: str | None = None):
    """Return the kernel module for `group` in {'walks', 'sgns', 'factor'}."""
    if group not in ("walks", "sgns", "factor"):
        raise ValueError(f"unknown kernel group {group!r}")
    name = backend or active_backend()
    return importlib.import_module(f"scimeter._accel.{group}_{name}")
