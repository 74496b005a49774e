"""Named random substreams.

Every source of randomness in a run draws from its own generator, derived
from (run seed, stream name) by hashing. Adding a new actor therefore never
perturbs the samples of existing ones, and runs are reproducible from the
seed alone.
"""

from __future__ import annotations

import hashlib

import numpy as np


def substream(seed: int, name: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}/{name}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:16], "big"))
