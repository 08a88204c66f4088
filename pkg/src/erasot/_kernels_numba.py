"""Numba-compiled hot kernels; bit-compatible with ``_kernels_numpy``.

Bit-valued outputs (extract, shuffle, erasures) are exactly identical to the
numpy lane; entropy floats agree to rounding (different summation order).
"""

import numpy as np
import numba
from numba import njit, prange

# workqueue is always available; avoids the TBB version probe warning
numba.config.THREADING_LAYER = "workqueue"

_U1 = np.uint64(1)
_U64 = np.uint64(64)


def _pack_words(bits: np.ndarray, pad_words: int = 1) -> np.ndarray:
    """Pack a 0/1 uint8 array into little-bit-endian uint64 words (+ zero padding)."""
    n = bits.shape[0]
    n_words = (n + 63) // 64
    padded = np.zeros(n_words * 64, dtype=np.uint64)
    padded[:n] = bits
    weights = np.left_shift(np.uint64(1), np.arange(64, dtype=np.uint64))
    words = (padded.reshape(n_words, 64) * weights).sum(axis=1, dtype=np.uint64)
    return np.concatenate([words, np.zeros(pad_words, dtype=np.uint64)])


@njit(cache=True, nogil=True)
def _toeplitz_words(seed_w, x_w, n_out, out):
    n_words = x_w.shape[0]
    for i in range(n_out):
        base = i >> 6
        off = np.uint64(i & 63)
        acc = np.uint64(0)
        if off == np.uint64(0):
            for w in range(n_words):
                acc ^= seed_w[base + w] & x_w[w]
        else:
            inv = _U64 - off
            for w in range(n_words):
                win = (seed_w[base + w] >> off) | (seed_w[base + w + 1] << inv)
                acc ^= win & x_w[w]
        acc ^= acc >> np.uint64(32)
        acc ^= acc >> np.uint64(16)
        acc ^= acc >> np.uint64(8)
        acc ^= acc >> np.uint64(4)
        acc ^= acc >> np.uint64(2)
        acc ^= acc >> np.uint64(1)
        out[i] = np.uint8(acc & _U1)


def toeplitz_extract(seed_bits: np.ndarray, x_bits: np.ndarray, n_out: int) -> np.ndarray:
    if n_out == 0:
        return np.zeros(0, dtype=np.uint8)
    n_in = x_bits.shape[0]
    # one guard word beyond the window span so base+w+1 never reads past the end
    seed_w = _pack_words(seed_bits, pad_words=2)
    x_w = _pack_words(x_bits, pad_words=0)[: (n_in + 63) // 64 + 1]
    out = np.empty(n_out, dtype=np.uint8)
    _toeplitz_words(seed_w, x_w, n_out, out)
    return out


@njit(cache=True, nogil=True)
def partial_shuffle(pool, uniforms):
    n = pool.shape[0]
    for i in range(uniforms.shape[0]):
        j = i + int(uniforms[i] * (n - i))
        tmp = pool[i]
        pool[i] = pool[j]
        pool[j] = tmp
    return pool


@njit(cache=True, nogil=True)
def erase_cascade(x, u1, u2, eps1, eps2, erased):
    n = x.shape[0]
    y = np.empty(n, dtype=np.uint8)
    z = np.empty(n, dtype=np.uint8)
    for i in range(n):
        if u1[i] < eps1:
            y[i] = erased
            z[i] = erased
        else:
            y[i] = x[i]
            z[i] = erased if u2[i] < eps2 else x[i]
    return y, z


@njit(cache=True, nogil=True, parallel=True)
def map_chunk_min_entropy(tables, projections, n_fixed_vals, out_len):
    n_tables = tables.shape[0]
    n_sets = projections.shape[0]
    size = tables.shape[1]
    n_out = 1 << out_len
    out = np.empty((n_tables, n_sets), dtype=np.float64)
    for t in prange(n_tables):
        hist = np.zeros(n_fixed_vals * n_out, dtype=np.int64)
        for s in range(n_sets):
            hist[:] = 0
            proj = projections[s]
            table = tables[t]
            for x in range(size):
                hist[(np.int64(proj[x]) << out_len) | np.int64(table[x])] += 1
            best = np.inf
            for yv in range(n_fixed_vals):
                total = 0
                for o in range(n_out):
                    total += hist[yv * n_out + o]
                h = 0.0
                for o in range(n_out):
                    c = hist[yv * n_out + o]
                    if c > 0:
                        p = c / total
                        h -= p * np.log2(p)
                if h < best:
                    best = h
            out[t, s] = best
    return out
