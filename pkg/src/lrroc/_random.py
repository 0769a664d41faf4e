"""Keyed random streams.

Each stream is a Philox (counter-based) generator whose key is derived from
``(seed, *key)`` through ``SeedSequence``. Draws depend only on the key, never
on which worker or in what order the stream is consumed.
"""

import numpy as np


def stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
