"""Deterministic random-stream derivation.

Every stochastic task derives its own generator from a base seed and a
stable task index, so results never depend on worker count or execution
order. Re-draws for a rejected task bump the stream without colliding
with any other task's stream.
"""

import numpy as np


def stream(base_seed, index, bump=0):
    """Generator for task ``index`` under ``base_seed``.

    The stream id is ``base_seed XOR index``; ``bump`` shifts resampling
    attempts out of the index range so bumped streams cannot collide with
    another task's primary stream.
    """
    if base_seed < 0 or index < 0 or bump < 0:
        raise ValueError("seed, index and bump must be non-negative")
    return np.random.default_rng((int(base_seed) ^ int(index)) + (int(bump) << 64))


def as_generator(rng):
    """Coerce ``rng`` (Generator, int seed, or None) to a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
