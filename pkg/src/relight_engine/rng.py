"""Portable deterministic random numbers.

Every stochastic choice in the pipeline flows through :class:`PortableRng`,
a SplitMix64 stream (Steele, Lea & Flood 2014; the same published constants
as Java's ``SplittableRandom``). The generator is tiny, fully specified by
its constants, and produces identical streams on every platform and Python
version, which is what makes batch runs reproducible byte for byte.

Seeds for individual images are derived from ``(global_seed, image_id)``
with SHA-256 so they are independent of processing order and worker count.
"""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_COORD_X = 0x9E3779B97F4A7C15
_COORD_Y = 0xC2B2AE3D27D4EB4F
_COORD_SEED = 0x165667B19E3779F9

_SEED_DOMAIN = b"relight-engine.seed.v1:"


class PortableRng:
    """SplitMix64 pseudo-random stream.

    state <- state + 0x9E3779B97F4A7C15 (mod 2^64), then the output is the
    xor-shift/multiply finalizer of the new state. Floats take the top 53
    bits, so ``random()`` is uniform on [0, 1) with full double resolution.
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def randrange(self, n: int) -> int:
        """Unbiased integer in [0, n) via rejection sampling."""
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        limit = _MASK64 + 1 - ((_MASK64 + 1) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def randint(self, lo: int, hi: int) -> int:
        """Integer in [lo, hi] inclusive."""
        return lo + self.randrange(hi - lo + 1)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle driven by this stream."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def weighted_choice(self, items, weights) -> object:
        """Categorical draw proportional to non-negative weights."""
        weights = [float(w) for w in weights]
        if any(w < 0.0 for w in weights):
            raise ValueError("weights must be non-negative")
        total = sum(weights)
        if total <= 0.0:
            raise ValueError("weights must have a positive sum")
        u = self.random() * total
        acc = 0.0
        for item, w in zip(items, weights):
            acc += w
            if u < acc:
                return item
        return items[-1]  # u == total after float accumulation


def derive_seed(global_seed: int, image_id: str) -> int:
    """Stable 64-bit per-image seed.

    SHA-256 over a fixed domain tag, the global seed as 8 big-endian bytes,
    and the UTF-8 image id; the first 8 digest bytes, big-endian, are the
    seed. Independent of processing order, thread count, and platform.
    """
    h = hashlib.sha256()
    h.update(_SEED_DOMAIN)
    h.update((global_seed & _MASK64).to_bytes(8, "big"))
    h.update(image_id.encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "big")


def hash_lattice(ix: np.ndarray, iy: np.ndarray, seed: int) -> np.ndarray:
    """Stateless hash of integer lattice coordinates to [-1, 1).

    Multiplies each coordinate and the seed by fixed odd constants, xors,
    and applies the SplitMix64 finalizer; the top 53 bits become the value.
    Vectorized over numpy integer arrays; race-free by construction.
    """
    with np.errstate(over="ignore"):
        h = ix.astype(np.int64).view(np.uint64) * np.uint64(_COORD_X)
        h ^= iy.astype(np.int64).view(np.uint64) * np.uint64(_COORD_Y)
        h ^= np.uint64(seed & _MASK64) * np.uint64(_COORD_SEED)
        h = (h ^ (h >> np.uint64(30))) * np.uint64(_MIX1)
        h = (h ^ (h >> np.uint64(27))) * np.uint64(_MIX2)
        h ^= h >> np.uint64(31)
    return (h >> np.uint64(11)).astype(np.float64) * (2.0 / (1 << 53)) - 1.0
