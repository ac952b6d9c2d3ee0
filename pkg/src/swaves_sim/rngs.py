"""Named, independent random streams derived from one run seed.

Every stochastic subsystem (topology build, per-user trace, per-user packet
arrivals, per-user classification fading, forecaster rollouts) pulls from its
own generator so that consuming more randomness in one subsystem never shifts
another. Stream identity = (run seed, stable name hash, optional index).
"""

from zlib import crc32

import numpy as np


def stream(seed: int, name: str, index: int = 0) -> np.random.Generator:
    """Generator for the given (seed, purpose, index) triple.

    crc32 keeps the name -> entropy mapping stable across platforms and runs,
    unlike hash().
    """
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), crc32(name.encode()), int(index)])
    )
