"""Bit-array helpers.

Bit strings are numpy uint8 arrays of 0/1 values, index 0 first. The normative
serialization is hex with the most significant bit of the first byte holding
index 0 (big bit-endian), plus an explicit length since hex pads to bytes.
"""

import numpy as np

from .errors import SizeError


def as_bits(values) -> np.ndarray:
    out = np.asarray(values, dtype=np.uint8)
    if out.ndim != 1:
        raise SizeError("bit strings are one-dimensional")
    if out.size and out.max() > 1:
        raise ValueError("bit strings may contain only 0 and 1")
    return out


def random_bits(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, 2, size=n, dtype=np.uint8)


def xor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape != b.shape:
        raise SizeError(f"xor length mismatch: {a.shape} vs {b.shape}")
    return np.bitwise_xor(a, b)


def bits_to_int(bits: np.ndarray) -> int:
    """Pack bits into an int, index 0 = least significant."""
    value = 0
    for i in range(bits.shape[0] - 1, -1, -1):
        value = (value << 1) | int(bits[i])
    return value


def int_to_bits(value: int, n: int) -> np.ndarray:
    return np.array([(value >> i) & 1 for i in range(n)], dtype=np.uint8)


def to_hex(bits: np.ndarray) -> str:
    """Hex dump, MSB of first byte = index 0; empty string for length 0."""
    if bits.size == 0:
        return ""
    return np.packbits(bits, bitorder="big").tobytes().hex()


def from_hex(text: str, length: int) -> np.ndarray:
    if length == 0:
        return np.zeros(0, dtype=np.uint8)
    raw = np.frombuffer(bytes.fromhex(text), dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="big")
    if bits.size < length:
        raise SizeError(f"hex string too short for {length} bits")
    return bits[:length].copy()
