"""Keyed random streams.

A stream is identified by ``(master_seed, stream_index)`` and expanded into
independent sub-streams per purpose (pump, emission, detector). Keys are fed to
:class:`numpy.random.SeedSequence` as a spawn key, so two streams with
different indices are statistically independent and the same key always
reproduces the same bits regardless of which worker draws it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PUMP = 0
EMISSION = 1
DETECTOR = 2

_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngSpec:
    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not isinstance(self.master_seed, (int, np.integer)) or not 0 <= self.master_seed <= _U64:
            raise ValueError(f"master_seed must be an unsigned 64-bit integer, got {self.master_seed!r}")
        if not isinstance(self.stream_index, (int, np.integer)) or self.stream_index < 0:
            raise ValueError(f"stream_index must be a non-negative integer, got {self.stream_index!r}")

    def with_index(self, stream_index: int) -> RngSpec:
        return RngSpec(self.master_seed, stream_index)

    def generator(self, purpose: int = 0) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.stream_index), int(purpose)))
        return np.random.Generator(np.random.Philox(seq))
