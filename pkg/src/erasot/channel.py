"""Broadcast channel: a cascade of two independent binary erasure stages.

Alice's bit enters stage one (erasure probability eps1) whose output Bob
receives; stage two (eps2) further erases Bob's symbol to produce Eve's. A
symbol erased for Bob is therefore always erased for Eve (degradedness).

Bit strings are uint8 arrays of {0,1}; erased strings are uint8 arrays over
{0, 1, ERASED}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

ERASED: int = 2


@dataclass(frozen=True)
class ChannelParams:
    """Erasure probabilities of the two cascade stages."""

    eps1: float
    eps2: float

    def __post_init__(self):
        if not (0.0 <= self.eps1 <= 1.0 and 0.0 <= self.eps2 <= 1.0):
            raise ValueError("erasure probabilities must lie in [0, 1]")

    @property
    def eve_erasure_prob(self) -> float:
        """Marginal per-symbol erasure probability seen by Eve."""
        return self.eps1 + (1.0 - self.eps1) * self.eps2


def transmit(x: np.ndarray, params: ChannelParams,
             rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Send a bit string through the cascade; returns (bob_symbols, eve_symbols).

    Each index is erased independently: stage one with probability eps1, and,
    if it survives, stage two with probability eps2. Two uniforms per symbol
    are consumed from ``rng`` in a fixed order, so identical seeds reproduce
    identical outputs on either kernel lane.
    """
    n = x.shape[0]
    u1 = rng.random(n)
    u2 = rng.random(n)
    return kernels.erase_cascade(x, u1, u2, params.eps1, params.eps2, ERASED)


def erasure_fraction(symbols: np.ndarray) -> float:
    """Fraction of erased symbols in a received string."""
    if symbols.size == 0:
        raise ValueError("erasure_fraction of an empty string is undefined")
    return float(np.count_nonzero(symbols == ERASED) / symbols.size)
