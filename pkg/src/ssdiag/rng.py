"""Deterministic substreams for parallel Monte Carlo runs.

Every replication draws from its own Philox stream keyed by
``(seed, *path)``, where the path typically ends in the replication
index.  Philox is counter-based, so streams for distinct keys are
independent and results do not depend on execution order, chunking, or
worker count.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *path: int) -> np.random.Generator:
    """Generator for one replication, keyed by (seed, *path)."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(path))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *path: int) -> int:
    """64-bit child seed for a nested simulation stage.

    Used when an outer replication launches its own inner simulation (which
    then keys per-replication substreams off the returned value).
    """
    ss = np.random.SeedSequence(seed, spawn_key=tuple(path))
    return int(ss.generate_state(1, np.uint64)[0])
