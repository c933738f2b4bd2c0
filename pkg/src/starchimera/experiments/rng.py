"""Seeded random streams.

Every stream is a PCG64 generator keyed by ``(seed, experiment, *indices)``:
the experiment name is hashed with CRC-32 and the indices (for example the
ε index and the seed index of a sweep) are appended to the spawn key, so
any (ε, seed) pair can be recomputed in isolation and in any order.
"""

from __future__ import annotations

import zlib

import numpy as np


def experiment_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def stream(seed: int, experiment: str, *indices: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(experiment_key(experiment), *map(int, indices)))
    return np.random.Generator(np.random.PCG64(ss))
