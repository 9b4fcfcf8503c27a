"""Seeded random streams.

Every generator in the package is numpy's ``PCG64`` bit generator seeded
through ``SeedSequence(seed, spawn_key=key)``.  The spawn key names the
substream, so the x-scores, y-scores, finalization draw and permutation
draws of one run never share state.  Both numpy primitives are stable
across platforms, which keeps emitted artifacts byte-identical.
"""

import numpy as np

BIT_GENERATOR = "PCG64"

# substream ids
STREAM_X = 0
STREAM_Y = 1
STREAM_FINALIZE = 2
STREAM_PERMUTATION = 3
STREAM_CALIBRATION = 4

_MASK64 = (1 << 64) - 1


def substream(seed, *key):
    """Return a ``numpy.random.Generator`` for substream ``key`` of ``seed``."""
    ss = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(master_seed, *key):
    """Hash ``(master_seed, *key)`` into a fresh 64-bit seed.

    Pure function of its arguments: the same tuple always gives the same
    seed, and distinct tuples give statistically independent seeds.
    """
    ss = np.random.SeedSequence(int(master_seed) & _MASK64, spawn_key=tuple(int(k) for k in key))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)
