"""Deterministic random streams derived from one integer seed.

Every consumer gets its own PCG64 generator seeded by
``SeedSequence([seed, purpose, *keys])``, so changing e.g. the number of
collocation points never shifts the network initialization.
"""

from __future__ import annotations

import zlib

import numpy as np

DEFAULT_SEED = 11

SAMPLING = 0
INIT = 1
SEARCH = 2
PDP = 3


def stream(seed: int, purpose: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(purpose), *map(int, keys)]))


def cell_seed(seed: int, *labels) -> int:
    """Per-cell seed for sweeps: ``seed + crc32("omega=..,level=..")`` modulo 2**31."""
    text = ",".join(str(v) for v in labels)
    return (int(seed) + zlib.crc32(text.encode("utf-8"))) % 2**31
