"""Counter-based random streams.

Every random number used by the resampling engines is a pure function of
``(seed, stream, row, cell, position)``, computed with the Philox-4x32-10
block cipher (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
There is no generator state to share, so any partition of the work across
threads reproduces the same numbers bit for bit.

Counter layout for one 128-bit block::

    word0 = row       (simulation / resample / permutation index)
    word1 = cell      (date index, class index, ...)
    word2 = position  (block index inside the row's stream)
    word3 = (stream << 16) | attempt
"""

from __future__ import annotations

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)

# Domain-separation tags for word3.
STREAM_MC = 1
STREAM_BOOTSTRAP = 2
STREAM_PERMUTATION = 3
STREAM_SYNTH = 4

_TWO_NEG53 = 1.0 / 9007199254740992.0


def split_seed(seed: int) -> tuple[int, int]:
    """Split a 64-bit seed into the two 32-bit Philox key words."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed & 0xFFFFFFFF, seed >> 32


def philox4x32(counter, key):
    """Philox-4x32 with 10 rounds.

    ``counter`` is a ``(..., 4)`` array of uint32 words, ``key`` a pair of
    uint32 words. Returns an array of the same shape as ``counter``.
    """
    ctr = np.asarray(counter, dtype=np.uint32)
    c0 = ctr[..., 0].astype(np.uint64)
    c1 = ctr[..., 1].astype(np.uint64)
    c2 = ctr[..., 2].astype(np.uint64)
    c3 = ctr[..., 3].astype(np.uint64)
    k0, k1 = int(key[0]) & 0xFFFFFFFF, int(key[1]) & 0xFFFFFFFF
    for _ in range(10):
        p0 = c0 * _M0
        p1 = c2 * _M1
        hi0 = p0 >> _SHIFT32
        lo0 = p0 & _MASK32
        hi1 = p1 >> _SHIFT32
        lo1 = p1 & _MASK32
        c0 = hi1 ^ c1 ^ np.uint64(k0)
        c1 = lo1
        c2 = hi0 ^ c3 ^ np.uint64(k1)
        c3 = lo0
        k0 = (k0 + _W0) & 0xFFFFFFFF
        k1 = (k1 + _W1) & 0xFFFFFFFF
    out = np.empty(ctr.shape, dtype=np.uint32)
    out[..., 0] = c0
    out[..., 1] = c1
    out[..., 2] = c2
    out[..., 3] = c3
    return out


def _blocks(seed, stream, rows, cell, n_blocks, attempt=0):
    rows = np.asarray(rows, dtype=np.uint64).reshape(-1)
    ctr = np.empty((rows.size, n_blocks, 4), dtype=np.uint32)
    ctr[..., 0] = (rows & _MASK32)[:, None]
    ctr[..., 1] = np.uint32(int(cell) & 0xFFFFFFFF)
    ctr[..., 2] = np.arange(n_blocks, dtype=np.uint32)[None, :]
    ctr[..., 3] = np.uint32(((int(stream) & 0xFFFF) << 16) | (int(attempt) & 0xFFFF))
    return philox4x32(ctr, split_seed(seed))


def uniforms(seed, stream, rows, cell, n, attempt=0):
    """53-bit uniforms on [0, 1), shape ``(len(rows), n)``.

    Each uniform consumes two 32-bit words, so one Philox block yields two.
    """
    rows = np.asarray(rows).reshape(-1)
    if n == 0:
        return np.empty((rows.size, 0))
    words = _blocks(seed, stream, rows, cell, (n + 1) // 2, attempt).reshape(rows.size, -1, 2)
    hi = (words[..., 0] >> np.uint32(5)).astype(np.float64)
    lo = (words[..., 1] >> np.uint32(6)).astype(np.float64)
    u = (hi * 67108864.0 + lo) * _TWO_NEG53
    return u.reshape(rows.size, -1)[:, :n]


def bounded_integers(seed, stream, rows, cell, n, bound, attempt=0):
    """Integers in ``[0, bound)``, shape ``(len(rows), n)``.

    Uses one 32-bit word per draw with a multiply-shift reduction; the bias
    is at most ``bound / 2**32``, negligible for resampling indices.
    """
    rows = np.asarray(rows).reshape(-1)
    if bound < 1 or bound > 2**32:
        raise ValueError(f"bound must be in [1, 2**32], got {bound}")
    if n == 0:
        return np.empty((rows.size, 0), dtype=np.int64)
    words = _blocks(seed, stream, rows, cell, (n + 3) // 4, attempt).reshape(rows.size, -1)
    w = words[:, :n].astype(np.uint64)
    return ((w * np.uint64(bound)) >> _SHIFT32).astype(np.int64)


def random_permutations(seed, stream, rows, cell, size):
    """One uniformly random permutation of ``range(size)`` per row."""
    u = uniforms(seed, stream, rows, cell, size)
    return np.argsort(u, axis=1, kind="stable")
