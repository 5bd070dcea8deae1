"""Counter-based random streams.

Every stochastic consumer (weight init, shuffling, dropout, exploration
noise, ...) draws from its own Philox stream derived from (seed, stream id,
optional sub-ids). Streams are independent and platform-stable, so replaying
a seed replays training bit for bit regardless of draw interleaving.
"""

from __future__ import annotations

import numpy as np

# stream ids; values are arbitrary but frozen
STREAM_BDM_INIT = 1
STREAM_PB_INIT = 2
STREAM_SHUFFLE = 3
STREAM_DROPOUT = 4
STREAM_NOISE = 5
STREAM_EPISODE = 6
STREAM_SPLIT = 7

_M64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _M64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def stream_key(seed: int, stream_id: int, *sub_ids: int) -> np.ndarray:
    """Two uint64 key words mixed from the seed and stream identifiers."""
    h = _splitmix64(seed & _M64)
    for w in (stream_id, *sub_ids):
        h = _splitmix64(h ^ _splitmix64(w & _M64))
    return np.array([h, _splitmix64(h)], dtype=np.uint64)


def philox_stream(seed: int, stream_id: int, *sub_ids: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=stream_key(seed, stream_id, *sub_ids)))
