"""Geometry kernel backend selection.

Prefers the compiled extension; falls back to the pure-Python mirror when
the extension is unavailable. Set RAILGUARD_PURE_KERNELS=1 to force the
pure backend (used by the kernel benchmark and cross-backend tests).
"""

import os

from . import _pure

if os.environ.get("RAILGUARD_PURE_KERNELS"):
    _backend = _pure
else:
    try:
        from . import _native as _backend  # type: ignore[no-redef]
    except ImportError:
        _backend = _pure

BACKEND = _backend.BACKEND
euclidean = _backend.euclidean
point_segment_distance = _backend.point_segment_distance
point_polyline_distance = _backend.point_polyline_distance
iou = _backend.iou


def available_backends():
    """All importable backend modules, pure first."""
    backends = [_pure]
    try:
        from . import _native
    except ImportError:
        pass
    else:
        backends.append(_native)
    return backends
