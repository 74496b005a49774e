"""Sampling distributions for block, mining, and inclusion timings.

All parameters and samples are integer milliseconds; samples are clamped
to stay strictly positive unless a zero minimum is explicitly configured.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Distribution:
    """constant, uniform(min,max), or clamped normal(mean, stddev, min, max)."""

    kind: str
    value_ms: int = 0
    min_ms: int = 0
    max_ms: int = 0
    mean_ms: int = 0
    stddev_ms: int = 0

    def __post_init__(self):
        if self.kind not in ("constant", "uniform", "normal"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "constant" and self.value_ms < 0:
            raise ValueError("constant value must be non-negative")
        if self.kind == "uniform" and not 0 <= self.min_ms <= self.max_ms:
            raise ValueError("uniform needs 0 <= min <= max")
        if self.kind == "normal":
            if self.stddev_ms < 0:
                raise ValueError("stddev must be non-negative")
            if not 0 < self.min_ms <= self.max_ms:
                raise ValueError("normal needs clamp bounds with min > 0")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(size, self.value_ms, dtype=np.int64)
        if self.kind == "uniform":
            return rng.integers(self.min_ms, self.max_ms + 1, size=size, dtype=np.int64)
        raw = rng.normal(self.mean_ms, self.stddev_ms, size=size)
        return np.clip(np.rint(raw), self.min_ms, self.max_ms).astype(np.int64)

    def sample_one(self, rng: np.random.Generator) -> int:
        return int(self.sample(rng, 1)[0])


def constant(value_ms: int) -> Distribution:
    return Distribution(kind="constant", value_ms=value_ms)


def uniform(min_ms: int, max_ms: int) -> Distribution:
    return Distribution(kind="uniform", min_ms=min_ms, max_ms=max_ms)


def normal(mean_ms: int, stddev_ms: int, min_ms: int, max_ms: int) -> Distribution:
    return Distribution(
        kind="normal", mean_ms=mean_ms, stddev_ms=stddev_ms, min_ms=min_ms, max_ms=max_ms
    )
