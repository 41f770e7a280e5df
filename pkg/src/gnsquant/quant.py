"""Quantization alphabets, the memoryless scalar quantizer, and MSQ baseline."""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

MID_TREAD_FINITE = "mid_tread_finite"
MID_TREAD_INFINITE = "mid_tread_infinite"
EXPLICIT = "explicit"


@dataclass(frozen=True)
class Alphabet:
    """Finite/infinite mid-tread level set or an explicit sorted level list.

    Mid-tread alphabets are {+-k*delta : 0 <= k <= K} (K=None means
    unbounded).  Nearest-level ties round away from zero for mid-tread
    kinds and toward the larger level for explicit kinds; out-of-range
    inputs saturate at the extreme levels.
    """

    kind: str
    delta: float | None = None
    K: int | None = None
    levels: tuple[float, ...] | None = None

    @classmethod
    def mid_tread_finite(cls, delta: float, K: int) -> "Alphabet":
        if delta <= 0:
            raise ValueError(f"step size must be positive, got {delta}")
        if K < 0:
            raise ValueError(f"K must be nonnegative, got {K}")
        return cls(kind=MID_TREAD_FINITE, delta=float(delta), K=int(K))

    @classmethod
    def mid_tread_infinite(cls, delta: float) -> "Alphabet":
        if delta <= 0:
            raise ValueError(f"step size must be positive, got {delta}")
        return cls(kind=MID_TREAD_INFINITE, delta=float(delta))

    @classmethod
    def explicit(cls, levels) -> "Alphabet":
        lv = tuple(float(x) for x in levels)
        if not lv:
            raise ValueError("explicit alphabet needs at least one level")
        if any(b <= a for a, b in zip(lv, lv[1:])):
            raise ValueError("explicit levels must be strictly ascending")
        return cls(kind=EXPLICIT, levels=lv)

    @property
    def q_max(self) -> float:
        """Saturation magnitude: K*delta, or the extreme explicit level."""
        if self.kind == MID_TREAD_FINITE:
            return self.K * self.delta
        if self.kind == EXPLICIT:
            return max(abs(self.levels[0]), abs(self.levels[-1]))
        return math.inf

    @property
    def n_levels(self) -> float:
        if self.kind == MID_TREAD_FINITE:
            return 2 * self.K + 1
        if self.kind == EXPLICIT:
            return len(self.levels)
        return math.inf

    def all_levels(self) -> tuple[float, ...]:
        """Every level, ascending; finite kinds only."""
        if self.kind == MID_TREAD_FINITE:
            return tuple(k * self.delta for k in range(-self.K, self.K + 1))
        if self.kind == EXPLICIT:
            return self.levels
        raise ValueError("infinite alphabet has no finite level list")

    def spec_string(self) -> str:
        """Canonical CLI/config form: mt:DELTA:K, mti:DELTA, or lv:a,b,c."""
        if self.kind == MID_TREAD_FINITE:
            return f"mt:{self.delta!r}:{self.K}"
        if self.kind == MID_TREAD_INFINITE:
            return f"mti:{self.delta!r}"
        return "lv:" + ",".join(repr(x) for x in self.levels)


def parse_alphabet(spec: str) -> Alphabet:
    """Parse "mt:DELTA:K", "mti:DELTA", or "lv:a,b,c"."""
    parts = spec.strip().split(":")
    try:
        if parts[0] == "mt" and len(parts) == 3:
            return Alphabet.mid_tread_finite(float(parts[1]), int(parts[2]))
        if parts[0] == "mti" and len(parts) == 2:
            return Alphabet.mid_tread_infinite(float(parts[1]))
        if parts[0] == "lv" and len(parts) == 2:
            return Alphabet.explicit(float(x) for x in parts[1].split(","))
    except ValueError as exc:
        raise ValueError(f"bad alphabet spec {spec!r}: {exc}") from None
    raise ValueError(f"bad alphabet spec {spec!r}; expected mt:D:K, mti:D, or lv:a,b,c")


def quantize_scalar(a: Alphabet, z: float) -> float:
    """Nearest alphabet level to z (ties per the alphabet's rule)."""
    if not math.isfinite(z):
        raise ValueError(f"cannot quantize non-finite value {z}")
    if a.kind == EXPLICIT:
        lv = a.levels
        pos = bisect_left(lv, z)
        if pos == 0:
            return lv[0]
        if pos == len(lv):
            return lv[-1]
        below, above = lv[pos - 1], lv[pos]
        # tie goes to the larger level
        return below if z - below < above - z else above
    # mid-tread: round |z|/delta half away from zero, then clamp
    k = math.floor(abs(z) / a.delta + 0.5)
    if a.kind == MID_TREAD_FINITE and k > a.K:
        k = a.K
    return math.copysign(k * a.delta, z) if k else 0.0


def msq(a: Alphabet, f: np.ndarray) -> np.ndarray:
    """Memoryless quantization: round every sample independently."""
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValueError("cannot quantize non-finite samples")
    if a.kind == EXPLICIT:
        lv = np.array(a.levels)
        pos = np.clip(np.searchsorted(lv, f), 1, len(lv) - 1)
        below, above = lv[pos - 1], lv[pos]
        q = np.where(f - below < above - f, below, above)
        q[f <= lv[0]] = lv[0]
        q[f >= lv[-1]] = lv[-1]
        return q
    k = np.floor(np.abs(f) / a.delta + 0.5)
    if a.kind == MID_TREAD_FINITE:
        k = np.minimum(k, a.K)
    return np.sign(f) * k * a.delta


def bit_accounting(q: np.ndarray) -> dict:
    """Distinct-level count and the bits per entry it implies."""
    distinct = int(np.unique(np.asarray(q)).size)
    return {
        "distinct_levels": distinct,
        "bits_per_entry": math.log2(distinct) if distinct else 0.0,
    }
