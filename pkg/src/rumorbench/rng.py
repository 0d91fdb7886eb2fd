"""Counter-based random streams.

Every random choice in a simulation is a pure function of
``(key, vertex, counter)``, so a draw never depends on the order in which
other draws were made.  Keys are derived from a single root seed with
:func:`derive_seed`.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_VERTEX_MIX = np.uint64(0xD6E8FEB86659FD93)
_COUNTER_MIX = np.uint64(0xA0761D6478BD642F)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / float(1 << 53)

# stream tags separating independent uses of one key
OFFSET_STREAM = 1
CALL_STREAM = 2
LOSS_STREAM = 3
LIST_STREAM = 4


def _mix64(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 array arithmetic wraps modulo 2**64
    x = x ^ (x >> _S30)
    x = x * _M1
    x = x ^ (x >> _S27)
    x = x * _M2
    return x ^ (x >> _S31)


def _tag_to_int(tag: int | str) -> int:
    if isinstance(tag, str):
        return int.from_bytes(hashlib.blake2b(tag.encode(), digest_size=8).digest(), "little")
    return int(tag) & MASK64


def derive_seed(seed: int, *tags: int | str) -> int:
    """Derive an independent 64-bit sub-seed from ``seed`` and a tag path."""
    x = np.array([int(seed) & MASK64], dtype=np.uint64)
    for tag in tags:
        x = _mix64(x + _GOLDEN)
        x = _mix64(x ^ np.array([_tag_to_int(tag)], dtype=np.uint64))
    return int(_mix64(x + _GOLDEN)[0])


def counter_bits(key, vertex, counter, stream: int = 0) -> np.ndarray:
    """64 random bits for each broadcast ``(key, vertex, counter)`` triple."""
    k = np.atleast_1d(np.asarray(key, dtype=np.uint64))
    v = np.atleast_1d(np.asarray(vertex, dtype=np.uint64))
    c = np.atleast_1d(np.asarray(counter, dtype=np.uint64))
    x = _mix64(k ^ np.uint64((stream * 0x9E3779B97F4A7C15) & MASK64))
    x = _mix64(x + (v + np.uint64(1)) * _VERTEX_MIX)
    return _mix64(x + (c + np.uint64(1)) * _COUNTER_MIX)


def counter_uniform(key, vertex, counter, stream: int = 0) -> np.ndarray:
    """Uniform doubles in [0, 1)."""
    return (counter_bits(key, vertex, counter, stream) >> _S11).astype(np.float64) * _INV53


def counter_index(key, vertex, counter, bound, stream: int = 0) -> np.ndarray:
    """Uniform integers in ``[0, bound)``; ``bound`` broadcasts and must be >= 1."""
    u = counter_uniform(key, vertex, counter, stream)
    b = np.asarray(bound, dtype=np.int64)
    idx = np.floor(u * b).astype(np.int64)
    return np.minimum(idx, b - 1)


def numpy_rng(seed: int, *tags: int | str) -> np.random.Generator:
    """A numpy Generator seeded from a derived sub-seed (used by graph generators)."""
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *tags)))
