from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass
class SampleBatch:
    """Measurement outcomes: one row per shot, one column per measured mode."""

    samples: np.ndarray
    modes: tuple[int, ...]
    seed: int
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def shots(self) -> int:
        return int(self.samples.shape[0])

    def counts(self) -> dict[tuple, int]:
        """Histogram of outcome rows (discrete samples only)."""
        rows, freq = np.unique(self.samples, axis=0, return_counts=True)
        return {tuple(int(v) for v in row): int(f) for row, f in zip(rows, freq)}
