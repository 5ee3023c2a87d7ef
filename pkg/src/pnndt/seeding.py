"""Deterministic derivation of child seeds from a base seed.

Every randomized operation takes an explicit seed and derives private
substreams for its internal pieces (per-candidate fits, per-node
threshold draws, per-run experiments), so concurrent execution cannot
change results.
"""

import numpy as np

# Stream tags keep unrelated substreams of one base seed apart.
STREAM_SPLIT = 1
STREAM_FIT = 2
STREAM_RANDOM_PAIR = 3
STREAM_TREE = 4
STREAM_SYNTH = 5


def derive_seed(*parts):
    """Mix integer parts into a fresh 64-bit seed, deterministically."""
    words = []
    for p in parts:
        p = int(p)
        if p < 0:
            raise ValueError("seed parts must be non-negative")
        if p == 0:
            words.append(0)
        while p:
            words.append(p & 0xFFFFFFFF)
            p >>= 32
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0])
