"""Per-slot reward series and the derived averages every experiment reports."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass
class MetricSeries:
    rewards: np.ndarray

    def __post_init__(self):
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        if self.rewards.ndim != 1:
            raise ConfigError("rewards must be a 1-D series")

    def __len__(self) -> int:
        return len(self.rewards)

    def cumulative_average(self) -> float:
        """(1/T) * sum of rewards; always within [-1, 1] for unit rewards."""
        return float(self.rewards.mean())

    def windowed(self, window_len: int = 500) -> np.ndarray:
        """Means over consecutive full blocks; length floor(T / window_len)."""
        if window_len < 1:
            raise ConfigError(f"window_len must be >= 1, got {window_len}")
        blocks = len(self.rewards) // window_len
        if blocks == 0:
            return np.empty(0)
        trimmed = self.rewards[:blocks * window_len]
        return trimmed.reshape(blocks, window_len).mean(axis=1)

    def final_average(self, fraction: float = 0.2) -> float:
        """Average over the trailing fraction of slots (the settled regime)."""
        if not 0.0 < fraction <= 1.0:
            raise ConfigError(f"fraction must be in (0, 1], got {fraction}")
        n = max(1, int(len(self.rewards) * fraction))
        return float(self.rewards[-n:].mean())
