"""Dispatch layer for the hot kernels (numba lane by default, numpy with ERASOT_NO_NUMBA=1)."""

from ._accel import HAVE_NUMBA, backend_name

if HAVE_NUMBA:
    from ._kernels_numba import (
        erase_cascade,
        map_chunk_min_entropy,
        partial_shuffle,
        toeplitz_extract,
    )
else:
    from ._kernels_numpy import (
        erase_cascade,
        map_chunk_min_entropy,
        partial_shuffle,
        toeplitz_extract,
    )

__all__ = [
    "HAVE_NUMBA",
    "backend_name",
    "erase_cascade",
    "map_chunk_min_entropy",
    "partial_shuffle",
    "toeplitz_extract",
]
