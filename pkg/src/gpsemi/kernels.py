"""Kernel backend selection.

The compiled extension is used when it imports cleanly; setting the
environment variable ``GPSEMI_PURE_PYTHON=1`` forces the NumPy fallback.
``BACKEND`` names the active implementation.
"""
import os

from . import _kernels_py

_forced_pure = os.environ.get("GPSEMI_PURE_PYTHON", "").strip() not in ("", "0")

if _forced_pure:
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

hermite_eval = _impl.hermite_eval
sech_envelope = _impl.sech_envelope
chirp_quadrature_1d = _impl.chirp_quadrature_1d
chirp_quadrature_2d = _impl.chirp_quadrature_2d


def num_threads():
    """Thread count for grid loops, from ``GPSEMI_NUM_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("GPSEMI_NUM_THREADS", "1")))
    except ValueError:
        return 1
