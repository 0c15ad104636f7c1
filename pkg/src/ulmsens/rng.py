"""Deterministic pseudo-random streams for reproducible experiments.

Every stochastic draw in this package flows through the xoshiro256**
generator defined here, seeded through splitmix64 expansion of a 64-bit
seed.  Both algorithms are fixed bit-for-bit so that identical seeds
reproduce identical datasets on any host, independent of numpy version
or thread count.

Derived draws are pinned down as precisely as the raw stream:

* ``u01``        -- ``(next_u64() >> 11) * 2**-53``, uniform in [0, 1).
* ``below(n)``   -- multiply-high bound: ``(next_u64() * n) >> 64``.
* ``normal_pair``-- Box-Muller on two uniforms mapped into (0, 1].
* ``poisson``    -- exponential inter-arrival counting (stable for any
  mean, consumes k+1 uniforms for a draw of k).
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1

# splitmix64 increment and mixing constants (Vigna's reference sequence).
_SM_GAMMA = 0x9E3779B97F4A7C15
_SM_MIX1 = 0xBF58476D1CE4E5B9
_SM_MIX2 = 0x94D049BB133111EB

# Salts for deriving independent per-frame sub-streams; the two consumers
# (frame synthesis, error injection) must never share a stream.
FRAME_SALT_SYNTH = 0x9E3779B97F4A7C15
FRAME_SALT_INJECT = 0xD1B54A32D192ED03

_INV_2_53 = 2.0 ** -53
_TWO_PI = 2.0 * math.pi


def splitmix64(state: int) -> int:
    """First output of a splitmix64 stream whose state starts at ``state``."""
    z = (state + _SM_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * _SM_MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _SM_MIX2) & MASK64
    return z ^ (z >> 31)


def splitmix64_stream(state: int, count: int) -> list[int]:
    """``count`` successive splitmix64 outputs starting from ``state``."""
    out = []
    s = state & MASK64
    for _ in range(count):
        s = (s + _SM_GAMMA) & MASK64
        z = ((s ^ (s >> 30)) * _SM_MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _SM_MIX2) & MASK64
        out.append(z ^ (z >> 31))
    return out


def mix_seed(seed: int, salt: int, index: int) -> int:
    """Sub-stream seed: ``splitmix64(seed XOR (salt * (index + 1)))``.

    ``index`` is the frame index (or any per-item counter); the +1 keeps
    index 0 from degenerating to the bare seed.
    """
    return splitmix64((seed ^ ((salt * (index + 1)) & MASK64)) & MASK64)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256StarStar:
    """xoshiro256** with splitmix64 state expansion from a 64-bit seed."""

    __slots__ = ("_s",)

    def __init__(self, seed: int):
        self._s = splitmix64_stream(seed & MASK64, 4)

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def u01(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * _INV_2_53

    def u01_open(self) -> float:
        """Uniform double in (0, 1]; safe as a log() argument."""
        return ((self.next_u64() >> 11) + 1) * _INV_2_53

    def below(self, n: int) -> int:
        """Integer in [0, n) via the multiply-high bound (n >= 1)."""
        return (self.next_u64() * n) >> 64

    def normal_pair(self) -> tuple[float, float]:
        """Two independent standard normals (Box-Muller, 2 uniforms)."""
        u1 = self.u01_open()
        u2 = self.u01()
        r = math.sqrt(-2.0 * math.log(u1))
        return r * math.cos(_TWO_PI * u2), r * math.sin(_TWO_PI * u2)

    def poisson(self, mean: float) -> int:
        """Poisson draw by counting unit-exponential arrivals up to ``mean``.

        ``mean`` == 0 consumes no stream values.
        """
        if mean < 0:
            raise ValueError(f"poisson mean must be >= 0, got {mean}")
        if mean == 0:
            return 0
        total = 0.0
        k = 0
        while True:
            total += -math.log(self.u01_open())
            if total > mean:
                return k
            k += 1
