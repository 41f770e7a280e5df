"""Deterministic 64-bit PRNG used by every randomized routine in the package.

The generator identity is fixed so that runs are reproducible from a single
64-bit seed, independent of Python or numpy versions:

* state seeding: splitmix64 driven by the user seed fills the four 64-bit
  state words,
* stream: xoshiro256** (Blackman/Vigna), the ``rotl(s1 * 5, 7) * 9``
  scrambler variant,
* floats: take the top 53 bits of an output word, scale by 2^-53,
* bounded integers: mask-and-reject on the low bits (mask is the smallest
  2^k - 1 >= n - 1, redraw while the masked value is >= n),
* permutations: Fisher-Yates sweeping from the last index down,
* normals: Box-Muller on two fresh uniforms, the sine mate is cached and
  returned on the next call.

Any reimplementation following the list above reproduces traces bit-exactly.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state once; returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def derive_seeds(seed: int, count: int) -> list[int]:
    """Derive `count` independent sub-seeds from one master seed.

    Used to give the signal draw and the algorithm run of a sweep cell
    their own streams.
    """
    state = seed & _MASK64
    out = []
    for _ in range(count):
        state, z = splitmix64(state)
        out.append(z)
    return out


class Xoshiro256StarStar:
    """xoshiro256** seeded through splitmix64 from a single 64-bit integer."""

    def __init__(self, seed: int):
        state = seed & _MASK64
        self._s = []
        for _ in range(4):
            state, z = splitmix64(state)
            self._s.append(z)
        self._gauss_cache: float | None = None

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def uniform01(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform01()

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) via masked rejection sampling."""
        if n <= 0:
            raise ValueError(f"randbelow needs n >= 1, got {n}")
        mask = (1 << (n - 1).bit_length()) - 1 if n > 1 else 0
        while True:
            r = self.next_u64() & mask
            if r < n:
                return r

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle, high index down to 1."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def permutation(self, n: int) -> list[int]:
        perm = list(range(n))
        self.shuffle(perm)
        return perm

    def normal(self) -> float:
        """Standard normal via Box-Muller; consumes two uniforms per pair."""
        if self._gauss_cache is not None:
            z = self._gauss_cache
            self._gauss_cache = None
            return z
        u1 = self.uniform01()
        while u1 == 0.0:
            u1 = self.uniform01()
        u2 = self.uniform01()
        radius = math.sqrt(-2.0 * math.log(u1))
        self._gauss_cache = radius * math.sin(2.0 * math.pi * u2)
        return radius * math.cos(2.0 * math.pi * u2)

    def normals(self, count: int) -> list[float]:
        return [self.normal() for _ in range(count)]
