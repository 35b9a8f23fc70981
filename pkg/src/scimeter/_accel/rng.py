"""Portable splitmix64 stream, reference implementation on Python ints.

The numba kernels re-implement the same constants on uint64; both sides are
checked for bit equality in the backend tests. Streams are keyed by
(seed, stream id) so parallel and serial walk generation draw identical
numbers.
"""

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

TO_UNIT = 2.0**-53


def mix64(x: int) -> int:
    x &= MASK64
    x = ((x ^ (x >> 30)) * _MIX1) & MASK64
    x = ((x ^ (x >> 27)) * _MIX2) & MASK64
    return x ^ (x >> 31)


def stream_state(seed: int, stream: int) -> int:
    """Initial state for stream `stream` of generator `seed`."""
    return mix64((seed & MASK64) ^ mix64((GOLDEN ^ stream) & MASK64))


class SplitMix64:
    """Tiny deterministic generator used by the pure-python code paths."""

    __slots__ = ("state",)

    def __init__(self, seed: int, stream: int = 0):
        self.state = stream_state(seed, stream)

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def next_unit(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * TO_UNIT

    def next_below(self, n: int) -> int:
        """Uniform-ish integer in [0, n) (modulo; bias < n / 2**64)."""
        return self.next_u64() % n
