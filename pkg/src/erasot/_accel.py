"""Numba availability / opt-out detection.

Set ERASOT_NO_NUMBA=1 to force the pure-numpy kernel lane. Both lanes are
bit-identical; the flag only trades speed.
"""

import os

_flag = os.environ.get("ERASOT_NO_NUMBA", "").strip().lower()
NUMBA_DISABLED = _flag in {"1", "true", "yes", "on"}

if NUMBA_DISABLED:
    HAVE_NUMBA = False
else:
    try:
        import numba  # noqa: F401

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        HAVE_NUMBA = False


def backend_name() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
