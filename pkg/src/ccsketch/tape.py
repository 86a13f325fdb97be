"""Counter-based random tape.

Every variate is a pure function of ``(seed, counter)``: one Philox4x32-10
block is evaluated per counter and its 128 output bits are split into two
64-bit words, the first feeding a uniform(-pi/2, pi/2) draw and the second an
exponential(1) draw.  Nothing is stored, so any position can be regenerated
on demand and two tapes with the same seed always agree bit for bit.

Bit layout (all little-endian in the 32-bit lanes):

* key   = (seed & 0xffffffff, seed >> 32)
* ctr   = (counter & 0xffffffff, counter >> 32, 0, 0)
* out   = Philox4x32-10(ctr, key) = (o0, o1, o2, o3)
* word_u = o0 | o1 << 32,  word_w = o2 | o3 << 32
* m = word >> 12 (52 bits),  v = (m + 0.5) * 2**-52, exactly representable
  and strictly inside (0, 1)
* U = pi * v - pi/2,  W = -log(v)
"""

from __future__ import annotations

import math

import numpy as np

_MASK32 = np.uint64(0xFFFFFFFF)
_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_ROUNDS = 10
_SHIFT32 = np.uint64(32)
_SHIFT12 = np.uint64(12)
_TWO_M52 = 2.0**-52

MAX_U64 = 2**64 - 1


def _as_u64(x) -> np.ndarray:
    arr = np.asarray(x)
    if arr.dtype == np.uint64:
        return arr
    if arr.dtype.kind in "iu":
        if np.any(arr < 0):
            raise ValueError("seeds and counters must be nonnegative")
        return arr.astype(np.uint64)
    if arr.dtype == object or arr.dtype.kind == "O":
        return np.array([int(v) & MAX_U64 for v in arr.ravel()], dtype=np.uint64).reshape(arr.shape)
    raise TypeError(f"expected integer seeds/counters, got dtype {arr.dtype}")


def philox4x32(counter, key):
    """Philox4x32-10 on 64-bit counters and 64-bit keys (broadcasting).

    Returns the four 32-bit output lanes as uint64 arrays.
    """
    ctr = _as_u64(counter)
    k = _as_u64(key)
    ctr, k = np.broadcast_arrays(ctr, k)
    c0 = ctr & _MASK32
    c1 = ctr >> _SHIFT32
    c2 = np.zeros_like(c0)
    c3 = np.zeros_like(c0)
    k0 = k & _MASK32
    k1 = k >> _SHIFT32
    w0 = np.uint64(_W0)
    w1 = np.uint64(_W1)
    with np.errstate(over="ignore"):
        for r in range(_ROUNDS):
            if r:
                k0 = (k0 + w0) & _MASK32
                k1 = (k1 + w1) & _MASK32
            p0 = _M0 * c0
            p1 = _M1 * c2
            hi0, lo0 = p0 >> _SHIFT32, p0 & _MASK32
            hi1, lo1 = p1 >> _SHIFT32, p1 & _MASK32
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


def words(seed, counter):
    """Two 64-bit words ``(word_u, word_w)`` for each ``(seed, counter)``."""
    o0, o1, o2, o3 = philox4x32(counter, seed)
    return o0 | (o1 << _SHIFT32), o2 | (o3 << _SHIFT32)


def _open_unit(word: np.ndarray) -> np.ndarray:
    return ((word >> _SHIFT12).astype(np.float64) + 0.5) * _TWO_M52


def uniform_exponential(seed, counter):
    """Variates ``(U, W)``: U ~ uniform(-pi/2, pi/2), W ~ exponential(1)."""
    wu, ww = words(seed, counter)
    u = math.pi * _open_unit(wu) - math.pi / 2
    w = -np.log(_open_unit(ww))
    return u, w


def derive_seed(seed, counter):
    """Child 64-bit seed(s) drawn from position ``counter`` of ``seed``'s tape."""
    return words(seed, counter)[0]


class RandomTape:
    """Sequential view of the counter-based stream for one seed.

    A tape is a small value: copying it (``clone``) and advancing the copy
    leaves the original untouched.
    """

    __slots__ = ("seed", "counter")

    def __init__(self, seed: int, counter: int = 0):
        if not 0 <= int(seed) <= MAX_U64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if not 0 <= int(counter) <= MAX_U64:
            raise ValueError("counter must fit in 64 unsigned bits")
        self.seed = int(seed)
        self.counter = int(counter)

    def __repr__(self) -> str:
        return f"RandomTape(seed={self.seed}, counter={self.counter})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, RandomTape):
            return NotImplemented
        return self.seed == other.seed and self.counter == other.counter

    def clone(self) -> "RandomTape":
        return RandomTape(self.seed, self.counter)

    def seek(self, counter: int) -> "RandomTape":
        self.counter = int(counter)
        return self

    def next_pair(self) -> tuple[float, float]:
        """Draw one (U, W) pair and advance by one."""
        u, w = uniform_exponential(np.uint64(self.seed), np.uint64(self.counter))
        self.counter += 1
        return float(u), float(w)

    def next_pairs(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Draw ``n`` pairs at consecutive counters and advance by ``n``."""
        ctr = np.uint64(self.counter) + np.arange(n, dtype=np.uint64)
        self.counter += n
        return uniform_exponential(np.uint64(self.seed), ctr)
