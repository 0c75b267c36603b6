"""Reproducible random streams.

Every random draw in the package comes from a stream keyed by
``(seed, purpose, chunk)``. Chunks have a fixed size, so the values a given
sample index receives do not depend on how work is split across workers.
"""

from __future__ import annotations

import zlib

import numpy as np

CHUNK = 1 << 16


def _purpose_key(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


def generator(seed: int, purpose: str = "", chunk: int = 0) -> np.random.Generator:
    """A Philox generator for one ``(seed, purpose, chunk)`` triple."""
    if seed is None:
        raise ValueError("a seed is mandatory; wall-clock seeding is not supported")
    ss = np.random.SeedSequence(int(seed), spawn_key=(_purpose_key(purpose), int(chunk)))
    return np.random.Generator(np.random.Philox(ss))


def uniforms(seed: int, purpose: str, n: int, width: int = 1) -> np.ndarray:
    """``(n, width)`` uniforms in [0, 1); row ``k`` depends only on seed, purpose and k."""
    out = np.empty((n, width))
    for c, start in enumerate(range(0, n, CHUNK)):
        stop = min(start + CHUNK, n)
        g = generator(seed, purpose, c)
        out[start:stop] = g.random((CHUNK, width))[: stop - start]
    return out
