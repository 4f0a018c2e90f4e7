"""Seeded, splittable random streams.

Streams are Philox (counter-based) generators keyed by ``(seed, *index)``
through :class:`numpy.random.SeedSequence`, so replication ``k`` of a run
draws the same numbers no matter which worker executes it.
"""

import numpy as np


def rng_stream(seed, *index):
    """Return an independent generator for ``seed`` and a stream index path.

    >>> a = rng_stream(7, 3).normal()
    >>> b = rng_stream(7, 3).normal()
    >>> a == b
    True
    """
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be non-negative")
    key = tuple(int(i) for i in index)
    ss = np.random.SeedSequence(entropy=seed, spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def as_generator(rng):
    """Coerce ``None``/int/Generator to a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        return np.random.default_rng()
    return rng_stream(int(rng))
