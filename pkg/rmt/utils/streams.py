"""
Seeded random-number streams

Every stochastic operation takes an explicit numpy Generator. Streams for
parallel work are derived from (master seed, key) so a result never depends
on the order in which tasks complete.
"""
from typing import Union

import numpy as np

Stream = np.random.Generator


def derive_stream(master_seed: int, *key: int) -> Stream:
    """Stream for task `key` under `master_seed`"""
    if master_seed < 0:
        raise ValueError("master_seed must be non-negative")
    return np.random.default_rng(
        np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    )


def as_stream(seed_or_stream: Union[int, Stream, None]) -> Stream:
    """Accept a seed, an existing Generator or None (fresh entropy)"""
    if isinstance(seed_or_stream, np.random.Generator):
        return seed_or_stream
    return np.random.default_rng(seed_or_stream)
