"""Deterministic derivation of independent RNG streams from a master seed."""

import zlib

import numpy as np


def _entropy_word(key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if isinstance(key, float):
        # proportions such as 0.7 become stable integers
        return int(round(key * 1_000_000))
    return int(key)


def derive_rng(seed: int, *keys) -> np.random.Generator:
    """Generator keyed by ``(seed, *keys)``; independent of call order."""
    words = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_entropy_word(k) & 0xFFFFFFFFFFFFFFFF for k in keys]
    return np.random.default_rng(np.random.SeedSequence(words))


def derive_seed(seed: int, *keys) -> int:
    """Child seed as a plain unsigned 64-bit integer."""
    return int(derive_rng(seed, *keys).integers(0, 2**63 - 1))
