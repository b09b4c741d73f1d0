"""Transmission patterns: how many symbols each spine emits."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class TransmissionPattern:
    """Per-spine symbol counts ``ells`` (one entry per k-bit segment).

    ``tails[a-1]`` is the number of symbols generated from spines ``a..n/k``,
    i.e. the effective codelength protecting segment ``a``.
    """

    ells: tuple[int, ...]

    def __post_init__(self):
        ells = tuple(int(x) for x in self.ells)
        if not ells:
            raise ValueError("pattern must have at least one spine")
        if any(x < 0 for x in ells):
            raise ValueError(f"symbol counts must be nonnegative, got {ells}")
        object.__setattr__(self, "ells", ells)

    @classmethod
    def uniform(cls, passes: int, spines: int) -> "TransmissionPattern":
        return cls((passes,) * spines)

    @classmethod
    def of(cls, ells: Sequence[int]) -> "TransmissionPattern":
        return cls(tuple(ells))

    def __len__(self) -> int:
        return len(self.ells)

    def __iter__(self):
        return iter(self.ells)

    def __getitem__(self, i):
        return self.ells[i]

    @property
    def total(self) -> int:
        return sum(self.ells)

    @property
    def tails(self) -> tuple[int, ...]:
        return tuple(int(x) for x in np.cumsum(self.ells[::-1])[::-1])

    @property
    def is_strictly_positive(self) -> bool:
        return all(x >= 1 for x in self.ells)

    def incremented(self, i: int, by: int = 1) -> "TransmissionPattern":
        """Copy with spine ``i`` (0-based) sending ``by`` more symbols."""
        ells = list(self.ells)
        ells[i] += by
        return TransmissionPattern(tuple(ells))

    def offsets(self) -> np.ndarray:
        """Start index of each spine's block in the flattened symbol order."""
        return np.concatenate(([0], np.cumsum(self.ells)[:-1])).astype(int)

    def __str__(self) -> str:
        return "[" + ",".join(str(x) for x in self.ells) + "]"
