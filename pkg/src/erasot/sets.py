"""Index-set bookkeeping for one protocol run.

Bob partitions [0, n) by his erasure pattern, samples equal-sized ``good``
(received) and ``bad`` (erased) sets, announces the leftovers, and binds
(good, bad) to the two string slots according to his choice bit. The selector
vector marks, over the sorted union of the two slots, which slot each index
belongs to; it travels one-time-padded so the split stays hidden.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .channel import ERASED
from .errors import DisjointnessError, SizeError

_FLOAT_GUARD = 1e-9


class AbortReason(enum.Enum):
    TOO_FEW_UNERASED = "too-few-unerased"
    TOO_FEW_ERASED = "too-few-erased"
    SPARE_TOO_SMALL = "spare-too-small"


class ProtocolAbort(Exception):
    """Bob declares an error and quits; folded into the abort flag by the runner."""

    def __init__(self, reason: AbortReason):
        super().__init__(reason.value)
        self.reason = reason


@dataclass(frozen=True)
class SetFamily:
    """All index sets of one non-aborted run (arrays sorted ascending)."""

    erased: np.ndarray
    unerased: np.ndarray
    good: np.ndarray
    bad: np.ndarray
    spare_unerased: np.ndarray   # announced unerased leftovers
    spare_erased: np.ndarray     # announced erased leftovers
    pad_block: np.ndarray        # leading spare_unerased indices, feeds the selector pad
    shared_block: np.ndarray     # following indices, padded into both string keys
    slot0: np.ndarray
    slot1: np.ndarray
    merged: np.ndarray           # sorted slot0 | slot1
    selector: np.ndarray         # bit i = 1 iff merged[i] in slot1

    def validate(self, n: int) -> None:
        """Check every structural invariant; used by tests and the verify suite."""
        for arr in (self.erased, self.unerased, self.good, self.bad,
                    self.spare_unerased, self.spare_erased,
                    self.pad_block, self.shared_block,
                    self.slot0, self.slot1, self.merged):
            assert arr.size == np.unique(arr).size, "duplicate indices"
            assert np.all(np.diff(arr) > 0) if arr.size > 1 else True, "not sorted"
            assert arr.size == 0 or (arr[0] >= 0 and arr[-1] < n), "index out of range"
        assert np.intersect1d(self.erased, self.unerased).size == 0
        assert self.erased.size + self.unerased.size == n
        assert set(self.good) <= set(self.unerased)
        assert set(self.bad) <= set(self.erased)
        assert np.array_equal(self.spare_unerased, np.setdiff1d(self.unerased, self.good))
        assert np.array_equal(self.spare_erased, np.setdiff1d(self.erased, self.bad))
        assert np.array_equal(self.pad_block,
                              self.spare_unerased[:self.pad_block.size])
        assert np.array_equal(
            self.shared_block,
            self.spare_unerased[self.pad_block.size:self.pad_block.size + self.shared_block.size])
        assert self.good.size == self.bad.size
        assert {tuple(self.slot0), tuple(self.slot1)} == {tuple(self.good), tuple(self.bad)}
        assert np.array_equal(self.merged, np.sort(np.concatenate([self.slot0, self.slot1])))
        assert self.selector.size == self.merged.size
        assert np.array_equal(self.merged[self.selector == 1], self.slot1)


def set_sizes(n: int, rate: float, delta: float, eps2_eff: float,
              key_len: int) -> tuple[int, int, int]:
    """Integer sizes (good_size, pad_len, shared_len) for a run.

    Secret-set sizes are floored (conservative), extractor-input sizes are
    ceiled (extra raw material only helps security).
    """
    good_size = int(math.floor(n * (rate + delta) + _FLOAT_GUARD))
    pad_len = int(math.ceil(2.0 * good_size / eps2_eff - _FLOAT_GUARD))
    shared_len = int(math.ceil(key_len * (1.0 - eps2_eff) / eps2_eff - _FLOAT_GUARD))
    return good_size, max(pad_len, 0), max(shared_len, 0)


def min_passing_count(threshold: float) -> int:
    """Smallest integer count that survives a ``count < threshold`` abort test."""
    return int(math.ceil(threshold - _FLOAT_GUARD))


def partition_by_erasure(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split [0, len(y)) into (erased, unerased) index sets."""
    idx = np.arange(y.shape[0], dtype=np.int64)
    mask = y == ERASED
    return idx[mask], idx[~mask]


def sample_uniform_subset(s: np.ndarray, k: int,
                          rng: np.random.Generator) -> np.ndarray:
    """Uniformly random k-subset of s (every k-subset equiprobable)."""
    if k > s.shape[0]:
        raise SizeError(f"cannot sample {k} elements from a set of {s.shape[0]}")
    pool = s.astype(np.int64).copy()
    uniforms = rng.random(k)
    kernels.partial_shuffle(pool, uniforms)
    return np.sort(pool[:k])


def assign_slots(good: np.ndarray, bad: np.ndarray,
                 u: int) -> tuple[np.ndarray, np.ndarray]:
    """Bind (good, bad) to slots: choice 0 keeps good in slot0, choice 1 swaps."""
    return (good, bad) if u == 0 else (bad, good)


def encode_selector(slot0: np.ndarray,
                    slot1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge two disjoint index sets and mark slot membership bitwise."""
    if np.intersect1d(slot0, slot1).size:
        raise DisjointnessError("slots overlap")
    merged = np.sort(np.concatenate([slot0, slot1]).astype(np.int64))
    selector = np.isin(merged, slot1).astype(np.uint8)
    return merged, selector


def decode_selector(merged: np.ndarray,
                    selector: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact inverse of encode_selector."""
    if merged.shape[0] != selector.shape[0]:
        raise SizeError("selector length must match the merged set")
    return merged[selector == 0], merged[selector == 1]


def derive_set_family(erased: np.ndarray, unerased: np.ndarray, u: int, cfg,
                      rng: np.random.Generator) -> SetFamily:
    """Run Bob's abort test and sample the full set family.

    Raises ProtocolAbort with a distinct reason when the observed erasure
    counts leave the delta-tolerance around their expectations or the spare
    unerased indices cannot cover both extractor blocks (finite-n rounding
    can violate the latter even when the former pass).
    """
    if unerased.shape[0] < cfg.min_unerased or unerased.shape[0] < cfg.good_size:
        raise ProtocolAbort(AbortReason.TOO_FEW_UNERASED)
    if erased.shape[0] < cfg.min_erased or erased.shape[0] < cfg.good_size:
        raise ProtocolAbort(AbortReason.TOO_FEW_ERASED)
    good = sample_uniform_subset(unerased, cfg.good_size, rng)
    bad = sample_uniform_subset(erased, cfg.good_size, rng)
    spare_unerased = np.setdiff1d(unerased, good)
    spare_erased = np.setdiff1d(erased, bad)
    if spare_unerased.shape[0] < cfg.pad_len + cfg.shared_len:
        raise ProtocolAbort(AbortReason.SPARE_TOO_SMALL)
    pad_block = spare_unerased[:cfg.pad_len]
    shared_block = spare_unerased[cfg.pad_len:cfg.pad_len + cfg.shared_len]
    slot0, slot1 = assign_slots(good, bad, u)
    merged, selector = encode_selector(slot0, slot1)
    return SetFamily(
        erased=erased.astype(np.int64), unerased=unerased.astype(np.int64),
        good=good, bad=bad,
        spare_unerased=spare_unerased, spare_erased=spare_erased,
        pad_block=pad_block, shared_block=shared_block,
        slot0=slot0, slot1=slot1, merged=merged, selector=selector,
    )
