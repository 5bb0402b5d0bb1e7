"""Seeded random streams.

All randomness in the package comes from Philox generators keyed by a 64-bit
seed. Independent substreams are obtained with :func:`derive_seed`, which
hashes ``(seed, *path)`` through :class:`numpy.random.SeedSequence`, so a
stream depends only on its path and never on how many draws other streams
made before it.
"""

import numpy as np

# stream tags used as the first element of derived paths
POINT = 0
REPLICATE = 1
JACKKNIFE = 2
SELECT_M = 3
TRIAL = 4
DATA = 5
ESTIMATE = 6


def derive_seed(seed, *path):
    """Return a 64-bit seed for the substream ``path`` below ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    lo, hi = ss.generate_state(2, np.uint32)
    return int(lo) | (int(hi) << 32)


def make_rng(seed):
    return np.random.Generator(np.random.Philox(int(seed)))


def fresh_seed():
    """Draw a seed from OS entropy (used when the caller gives none)."""
    return int(np.random.SeedSequence().generate_state(2, np.uint64)[0])


def resolve_seed(seed):
    return fresh_seed() if seed is None else int(seed)
