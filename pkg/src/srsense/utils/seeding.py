"""
Seed paths for reproducible parallel Monte Carlo.

Every random draw in srsense is addressed by a path of non-negative integers
below a master seed. The path is fed to numpy's SeedSequence as spawn key, so
two draws with the same path are bit-identical no matter which process makes
them, and distinct paths give statistically independent streams.
"""

import zlib
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SeedPath:
    master_seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if self.master_seed < 0:
            raise ValueError(f"master seed must be >= 0: {self.master_seed}")
        if any(i < 0 for i in self.path):
            raise ValueError(f"seed path entries must be >= 0: {self.path}")

    def child(self, *index: int) -> "SeedPath":
        return SeedPath(self.master_seed, self.path + tuple(index))

    def sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.master_seed, spawn_key=self.path)

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(self.sequence())


def experiment_id(kind: str) -> int:
    """Stable numeric id of an experiment kind (CRC-32 of its name)."""
    return zlib.crc32(kind.encode("utf-8"))
