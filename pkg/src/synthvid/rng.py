"""Deterministic counter-based random streams.

Every video in a dataset owns a private stream keyed from the dataset's
global seed and the video index. Streams are pure 64-bit integer machines
(splitmix64-style finalizer over a Weyl counter), so a given seed produces
the same draw sequence on any platform, any thread count, any run.

Floating-point draws are built from the raw u64 stream here, never from a
library generator: uniform takes the top 53 bits, the exponential uses the
inverse CDF. Keeping these derivations explicit is what makes the byte-level
reproducibility contract checkable.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15  # odd Weyl increment, 2^64 / golden ratio

_INV_2_53 = 2.0 ** -53


def mix64(z: int) -> int:
    """splitmix64 finalizer; a bijection on 64-bit integers."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_video_seed(global_seed: int, video_index: int) -> int:
    """Per-index 64-bit seed, pure in both arguments.

    For a fixed global seed the map index -> seed is injective over the full
    64-bit index range: the Weyl step is odd (hence bijective mod 2^64) and
    mix64 is a bijection, so distinct indices can never collide.
    """
    if video_index < 0:
        raise ValueError(f"video_index must be >= 0, got {video_index}")
    key = mix64(global_seed)
    return mix64((key + (video_index + 1) * _GAMMA) & _MASK64)


class RngStream:
    """Counter-based stream: output k is mix64(key + (k+1)*gamma).

    Immutable key, advancing counter. Instances are cheap; never share one
    across videos or threads -- derive a fresh seed instead.
    """

    __slots__ = ("key", "counter")

    def __init__(self, seed: int):
        self.key = mix64(seed)
        self.counter = 0

    def next_u64(self) -> int:
        self.counter += 1
        return mix64((self.key + self.counter * _GAMMA) & _MASK64)

    def unit(self) -> float:
        """Uniform in [0, 1), exactly (top 53 bits) / 2^53."""
        return (self.next_u64() >> 11) * _INV_2_53

    def unit_open_closed(self) -> float:
        """Uniform in (0, 1]; safe as a log argument."""
        return ((self.next_u64() >> 11) + 1) * _INV_2_53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.unit()

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n), rejection-sampled to avoid modulo bias."""
        if n <= 0:
            raise ValueError(f"randint needs n >= 1, got {n}")
        limit = ((1 << 64) // n) * n
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def randint_range(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] inclusive."""
        if hi < lo:
            raise ValueError(f"empty integer range [{lo}, {hi}]")
        return lo + self.randint(hi - lo + 1)

    def exponential(self, mean: float) -> float:
        """Inverse-CDF exponential draw: -mean * ln(u), u in (0, 1]."""
        return -mean * math.log(self.unit_open_closed())

    def split(self, tag: int) -> "RngStream":
        """Independent child stream; pure in (self.key, tag), ignores counter."""
        return RngStream(derive_video_seed(self.key, tag))


# Sub-stream tags hung off each video seed. The scene stream and the mixture
# decision are split so that toggling a mixture never shifts scene latents.
SCENE_STREAM = 0
MIXTURE_STREAM = 1
ANALYSIS_STREAM = 2


def video_stream(global_seed: int, video_index: int, tag: int = SCENE_STREAM) -> RngStream:
    """The canonical stream for one video's generation (or a tagged sibling)."""
    return RngStream(derive_video_seed(derive_video_seed(global_seed, video_index), tag))
