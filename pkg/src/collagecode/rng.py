"""Seeded PRNG with a fixed cross-language contract.

The simulator's golden files are only portable if every implementation draws
identical streams, so the whole chain is pinned:

* u64 stream: SplitMix64 (state += 0x9E3779B97F4A7C15, then two xor-multiply
  mixing steps); seed 0 produces 0xE220A8397B1DCDAF first.
* uniform in [0, 1): ``(u64 >> 11) * 2**-53``.
* standard normal: Box-Muller, two fresh uniforms per draw,
  ``sqrt(-2*ln(1 - u1)) * cos(2*pi*u2)``. The second Box-Muller variate is
  never cached.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_TWO53_INV = 2.0**-53


def splitmix64_next(state: int) -> tuple[int, int]:
    """One step of the SplitMix64 recurrence: (state', output)."""
    state = (state + _GAMMA) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return state, z ^ (z >> 31)


class Prng:
    """A single deterministic draw stream. One instance per simulation run.

    Not safe to share across threads; hand each concurrent run its own.
    """

    __slots__ = ("state", "draws")

    def __init__(self, seed: int):
        self.state = seed & _MASK64
        self.draws = 0  # uniforms consumed; used by stream-alignment tests

    def next_u64(self) -> int:
        self.state, out = splitmix64_next(self.state)
        self.draws += 1
        return out

    def next_float(self) -> float:
        """Uniform in [0, 1)."""
        return (self.next_u64() >> 11) * _TWO53_INV

    def next_normal(self) -> float:
        """Standard normal via Box-Muller; always consumes exactly two uniforms."""
        u1 = self.next_float()
        u2 = self.next_float()
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)
