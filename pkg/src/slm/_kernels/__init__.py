"""Split-scan kernel backend selection.

The compiled extension is preferred when importable; the numpy module is
the fallback. Both expose the same six functions and are kept bit-identical
(see _scan_np.py for the shared accumulation convention). Set
``SLM_BACKEND=python`` to force the fallback, ``SLM_BACKEND=cython`` to
require the extension (ImportError if it was not built).
"""

import os

from slm._kernels import _scan_np

try:
    from slm._kernels import _scan_cy
except ImportError:
    _scan_cy = None

_FUNCS = (
    "scan_entropy",
    "scan_mse",
    "scan_gain",
    "scan_entropy_many",
    "scan_mse_many",
    "scan_gain_many",
)


def available_backends():
    out = {"numpy": _scan_np}
    if _scan_cy is not None:
        out["cython"] = _scan_cy
    return out


_requested = os.environ.get("SLM_BACKEND", "").strip().lower()
if _requested in ("python", "numpy"):
    _active = _scan_np
    BACKEND = "numpy"
elif _requested in ("cython", "c"):
    if _scan_cy is None:
        raise ImportError(
            "SLM_BACKEND=cython but the compiled extension is not available"
        )
    _active = _scan_cy
    BACKEND = "cython"
elif _requested:
    raise ImportError(f"unknown SLM_BACKEND value: {_requested!r}")
elif _scan_cy is not None:
    _active = _scan_cy
    BACKEND = "cython"
else:
    _active = _scan_np
    BACKEND = "numpy"

scan_entropy = _active.scan_entropy
scan_mse = _active.scan_mse
scan_gain = _active.scan_gain
scan_entropy_many = _active.scan_entropy_many
scan_mse_many = _active.scan_mse_many
scan_gain_many = _active.scan_gain_many

__all__ = ["BACKEND", "available_backends", *_FUNCS]
