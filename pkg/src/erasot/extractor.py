"""Privacy amplification: seeded functions mapping raw bit vectors to short keys.

Two interchangeable backends behind one spec:

* ``random-table`` materializes a uniformly random function as a lookup table
  of 2**input_len words. This is the fully random-map model the enumeration
  oracles analyze; feasible only for small inputs.
* ``universal-hash`` is a seeded sliding-window (Toeplitz-style) binary matrix,
  the scalable default with the usual 2-universal hashing guarantee profile.

Extractor seeds are public protocol material: they travel in the transcript,
and all security statements condition on them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bits, kernels, rng as rng_mod
from .errors import BackendError, SizeError

RANDOM_TABLE = "random-table"
UNIVERSAL_HASH = "universal-hash"
BACKENDS = (RANDOM_TABLE, UNIVERSAL_HASH)

MAX_TABLE_INPUT = 24


@dataclass(frozen=True)
class ExtractorSpec:
    backend: str
    seed: int
    input_len: int
    output_len: int

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise BackendError(f"unknown backend {self.backend!r}")
        if not (0 <= self.output_len <= self.input_len):
            raise ValueError("output_len must lie in [0, input_len]")
        if self.backend == RANDOM_TABLE and self.input_len > MAX_TABLE_INPUT:
            raise BackendError(
                f"random-table input_len {self.input_len} exceeds {MAX_TABLE_INPUT}; "
                f"the table of 2**input_len entries must be materializable")


class RandomTableExtractor:
    """Uniformly random map realized as an explicit table, derived from the seed.

    The ``table`` array is deliberately mutable so tests can fault-inject
    corrupted entries.
    """

    def __init__(self, spec: ExtractorSpec):
        self.spec = spec
        gen = rng_mod.generator(spec.seed)
        self.table = gen.integers(0, 1 << spec.output_len,
                                  size=1 << spec.input_len, dtype=np.uint32)

    def extract(self, raw: np.ndarray) -> np.ndarray:
        if raw.shape[0] != self.spec.input_len:
            raise SizeError(
                f"raw length {raw.shape[0]} != input_len {self.spec.input_len}")
        word = int(self.table[bits.bits_to_int(raw)])
        return bits.int_to_bits(word, self.spec.output_len)


class ToeplitzExtractor:
    """Sliding-window binary matrix-vector map over GF(2), derived from the seed."""

    def __init__(self, spec: ExtractorSpec):
        self.spec = spec
        gen = rng_mod.generator(spec.seed)
        n_seed_bits = max(spec.input_len + spec.output_len - 1, 0)
        self.seed_bits = gen.integers(0, 2, size=n_seed_bits, dtype=np.uint8)

    def matrix(self) -> np.ndarray:
        """Dense 0/1 matrix view (row i = seed_bits[i : i+input_len]); for tests."""
        rows = [self.seed_bits[i:i + self.spec.input_len]
                for i in range(self.spec.output_len)]
        return np.array(rows, dtype=np.uint8).reshape(self.spec.output_len,
                                                      self.spec.input_len)

    def extract(self, raw: np.ndarray) -> np.ndarray:
        if raw.shape[0] != self.spec.input_len:
            raise SizeError(
                f"raw length {raw.shape[0]} != input_len {self.spec.input_len}")
        return kernels.toeplitz_extract(self.seed_bits, raw, self.spec.output_len)


Extractor = RandomTableExtractor | ToeplitzExtractor


def make_extractor(spec: ExtractorSpec) -> Extractor:
    """Build the deterministic extractor described by ``spec``."""
    if spec.backend == RANDOM_TABLE:
        return RandomTableExtractor(spec)
    return ToeplitzExtractor(spec)


def extract(ex: Extractor, raw: np.ndarray) -> np.ndarray:
    return ex.extract(raw)


@dataclass(frozen=True)
class KeyBundle:
    """The three derived keys of a run plus the public seeds that produced them."""

    pad_key: np.ndarray   # one-time pad for the selector vector
    key0: np.ndarray
    key1: np.ndarray
    seeds: tuple[int, int, int]

    def __post_init__(self):
        if self.key0.shape != self.key1.shape:
            raise SizeError("key0 and key1 must have equal length")
