"""Keyed counter-based random streams.

Every stream is a Philox generator whose key is derived from the user seed
and a tuple of labels, so a draw depends only on *what* it is for and never
on the order in which work is scheduled.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_part(part) -> int:
    if isinstance(part, (bool, np.bool_)):
        return int(part)
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("stream keys must be nonnegative")
        return int(part)
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    raise TypeError(f"unsupported stream key component {part!r}")


def stream(seed: int, *keys) -> np.random.Generator:
    """Independent generator for (seed, *keys)."""
    if seed is None:
        seed = 0
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key_part(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))
