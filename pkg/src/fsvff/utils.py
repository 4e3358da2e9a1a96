"""Deterministic seed derivation.

Every random decision in the package draws from a named sub-stream of one
top-level seed, so parallel or reordered evaluation cannot change results.
"""

import zlib

import numpy as np


def derive_seed(seed: int, *tags) -> int:
    h = seed & 0xFFFFFFFF
    for tag in tags:
        h = zlib.crc32(str(tag).encode(), h)
    return h


def rng_stream(seed: int, *tags) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *tags))
