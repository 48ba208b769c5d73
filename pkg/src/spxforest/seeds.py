"""Seed splitting: every random task draws from ``derive(seed, *keys)``."""

import zlib

import numpy as np


def _key(k):
    if isinstance(k, str):
        return zlib.crc32(k.encode("utf-8"))
    return int(k)


def derive(seed: int, *keys) -> int:
    """64-bit subseed for task ``keys`` under ``seed``.

    Strings are mapped through CRC-32, so ``derive(7, "slic", 3)`` is the same
    on every platform and independent of scheduling order.
    """
    ss = np.random.SeedSequence(int(seed) & ((1 << 64) - 1), spawn_key=tuple(_key(k) for k in keys))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)
