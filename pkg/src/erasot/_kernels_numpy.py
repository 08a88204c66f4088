"""Pure-numpy reference implementations of the hot kernels.

Every function here has a numba twin in ``_kernels_numba`` with the same
signature and bit-identical output. Keep the two files in sync.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def toeplitz_extract(seed_bits: np.ndarray, x_bits: np.ndarray, n_out: int) -> np.ndarray:
    """Multiply the sliding-window binary matrix built from ``seed_bits`` by ``x_bits`` mod 2.

    Row i of the matrix is seed_bits[i : i + len(x_bits)]; seed_bits must hold
    at least len(x_bits) + n_out - 1 entries.
    """
    if n_out == 0:
        return np.zeros(0, dtype=np.uint8)
    n_in = x_bits.shape[0]
    rows = sliding_window_view(seed_bits, n_in)[:n_out]
    return ((rows @ x_bits.astype(np.int64)) & 1).astype(np.uint8)


def partial_shuffle(pool: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """First-k steps of a Fisher-Yates shuffle driven by pre-drawn uniforms.

    Mutates ``pool`` in place and returns it; the sampled subset is pool[:k]
    (unsorted), k = len(uniforms).
    """
    n = pool.shape[0]
    for i in range(uniforms.shape[0]):
        j = i + int(uniforms[i] * (n - i))
        tmp = pool[i]
        pool[i] = pool[j]
        pool[j] = tmp
    return pool


def erase_cascade(x: np.ndarray, u1: np.ndarray, u2: np.ndarray,
                  eps1: float, eps2: float, erased: int):
    """Apply two erasure stages to x given pre-drawn uniforms (one pair per symbol)."""
    e1 = u1 < eps1
    y = np.where(e1, erased, x).astype(np.uint8)
    z = np.where(e1 | (u2 < eps2), erased, x).astype(np.uint8)
    return y, z


def map_chunk_min_entropy(tables: np.ndarray, projections: np.ndarray,
                          n_fixed_vals: int, out_len: int) -> np.ndarray:
    """Min over fixed-input assignments of H(f(X) | fixed bits), per (table, index set).

    tables: uint32[T, size] (size = full input space of each map f).
    projections: uint8[S, size]; projections[s, x] = integer packing of x's bits
    at index set s (values in [0, n_fixed_vals)).
    Returns float64[T, S] of min_y H(f(X) | X|_I = y) in bits.
    """
    n_out = 1 << out_len
    n_tables = tables.shape[0]
    n_sets = projections.shape[0]
    out = np.empty((n_tables, n_sets), dtype=np.float64)
    for t in range(n_tables):
        table = tables[t].astype(np.int64)
        for s in range(n_sets):
            key = (projections[s].astype(np.int64) << out_len) | table
            joint = np.bincount(key, minlength=n_fixed_vals * n_out)
            joint = joint.reshape(n_fixed_vals, n_out).astype(np.float64)
            totals = joint.sum(axis=1, keepdims=True)
            p = joint / totals
            with np.errstate(divide="ignore", invalid="ignore"):
                terms = np.where(p > 0, p * np.log2(p), 0.0)
            out[t, s] = float(np.min(-terms.sum(axis=1)))
    return out
