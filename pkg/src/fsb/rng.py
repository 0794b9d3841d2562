"""Deterministic random number generation.

Episode sampling and weight initialization must be reproducible bit-for-bit
across machines and across independent implementations in other languages,
so everything here is pinned to one concrete algorithm: SplitMix64.

The stream seeded with ``s`` produces, on the k-th call (k = 1, 2, ...):

    output_k = mix64(s + k * 0x9E3779B97F4A7C15)        (mod 2**64)

where ``mix64`` is the SplitMix64 finalizer

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

Derived quantities are defined on top of the raw 64-bit stream:

* integer below n:  ``next_u64() % n``  (the tiny modulo bias is irrelevant
  at the scale of class/row counts and keeps the contract one line long)
* uniform in [0, 1): ``(next_u64() >> 11) * 2**-53``
* seed mixing:      ``mix(a, b) = mix64(a + GOLDEN * (b + 1))``  (mod 2**64)
"""

from __future__ import annotations

import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """SplitMix64 output finalizer on a 64-bit integer."""
    z &= MASK
    z = ((z ^ (z >> 30)) * _M1) & MASK
    z = ((z ^ (z >> 27)) * _M2) & MASK
    return z ^ (z >> 31)


def mix(a: int, b: int) -> int:
    """Combine two 64-bit values into one well-scrambled seed."""
    return mix64((a + GOLDEN * ((b & MASK) + 1)) & MASK)


class SplitMix64:
    """Sequential SplitMix64 stream with a bulk path for large draws.

    ``fill_uniform`` consumes exactly as many raw outputs as element count,
    and is value-identical to calling ``uniform`` in a loop.
    """

    def __init__(self, seed: int):
        self._state = seed & MASK

    def next_u64(self) -> int:
        self._state = (self._state + GOLDEN) & MASK
        return mix64(self._state)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError(f"n must be positive, got {n}")
        return self.next_u64() % n

    def uniform(self) -> float:
        """Uniform float in [0, 1) with 53 random mantissa bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def fill_uniform(self, shape) -> np.ndarray:
        """Array of uniforms in [0, 1), row-major, advancing the stream."""
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        with np.errstate(over="ignore"):
            k = np.arange(1, count + 1, dtype=np.uint64)
            z = np.uint64(self._state) + np.uint64(GOLDEN) * k
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
            z = z ^ (z >> np.uint64(31))
        self._state = (self._state + count * GOLDEN) & MASK
        return ((z >> np.uint64(11)) * 2.0**-53).reshape(shape)

    def shuffle_prefix(self, items: list, need: int) -> list:
        """First ``need`` entries of a Fisher-Yates shuffle of ``items``.

        Partial shuffle: position i swaps with a uniform j in [i, len), so
        only ``need`` draws are consumed.  ``items`` is modified in place
        and the selected prefix is returned.
        """
        n = len(items)
        if need > n:
            raise ValueError(f"need {need} items from {n}")
        for i in range(need):
            j = i + self.below(n - i)
            items[i], items[j] = items[j], items[i]
        return items[:need]
