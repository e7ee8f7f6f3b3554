"""Fixed-algorithm pseudo-random generator for every seeded decision.

PCG XSH-RR 64/32: 64-bit LCG state, 32-bit xorshift-rotate output.
Constants (multiplier 6364136223846793005, increment (stream << 1) | 1)
follow the reference generator, so identical (seed, stream) pairs produce
identical byte streams on every platform and Python build.  Nothing in the
pipeline draws randomness from anywhere else.

Stream ids below keep independent consumers off each other's sequences;
reusing a (seed, stream) pair elsewhere would silently correlate noise.
"""

from __future__ import annotations

import math

_MULT = 6364136223846793005
_MASK64 = (1 << 64) - 1

# Stream id registry.
STREAM_SOURCE_BASE = 1  # + StreamSource value: per-device sample noise
STREAM_DOCK = 16
STREAM_TAPE_BASE = 32  # + trial index
STREAM_MANIFEST_MIX = 64
STREAM_REPLAY_NOISE = 80


class Pcg32:
    """Deterministic PCG-family 64/32 generator."""

    def __init__(self, seed: int, stream: int = 0) -> None:
        self._inc = (((stream << 1) | 1)) & _MASK64
        self._state = 0
        self._next_u32()
        self._state = (self._state + (seed & _MASK64)) & _MASK64
        self._next_u32()
        self._spare_gauss: float | None = None

    def _next_u32(self) -> int:
        old = self._state
        self._state = (old * _MULT + self._inc) & _MASK64
        xorshifted = (((old >> 18) ^ old) >> 27) & 0xFFFFFFFF
        rot = old >> 59
        return ((xorshifted >> rot) | (xorshifted << ((-rot) & 31))) & 0xFFFFFFFF

    def next_u32(self) -> int:
        return self._next_u32()

    def random(self) -> float:
        """Uniform in [0, 1) with 32-bit resolution."""
        return self._next_u32() * 2.0**-32

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n) without modulo bias."""
        if n <= 0:
            raise ValueError(f"randrange needs a positive bound, got {n}")
        threshold = (-n) % n  # == 2**32 % n when n fits in 32 bits
        while True:
            r = self._next_u32()
            if r >= threshold:
                return r % n

    def gauss(self, sigma: float = 1.0) -> float:
        """Normal deviate via Box-Muller (pairs cached)."""
        if self._spare_gauss is not None:
            z = self._spare_gauss
            self._spare_gauss = None
            return z * sigma
        u1 = 0.0
        while u1 == 0.0:
            u1 = self.random()
        u2 = self.random()
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._spare_gauss = r * math.sin(theta)
        return r * math.cos(theta) * sigma

    def unit_vector(self) -> tuple[float, float, float]:
        """Uniform direction on the sphere (area-preserving z, azimuth)."""
        z = 2.0 * self.random() - 1.0
        phi = 2.0 * math.pi * self.random()
        s = math.sqrt(max(0.0, 1.0 - z * z))
        return (s * math.cos(phi), s * math.sin(phi), z)
