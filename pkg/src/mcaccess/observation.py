"""Sliding N x M observation window shared by every learning agent.

Column 0 is the newest observation; each column holds the reward (+1/-1)
at the sensed channel's row and zeros elsewhere. The network input is the
column-major flattening, so the newest column comes first. Pushing never
mutates previously returned arrays: agents keep the pre-push flattening
for the TD update while the post-push one is built.
"""

from __future__ import annotations

import numpy as np

from .errors import ActionError, ConfigError


class ObservationWindow:

    def __init__(self, n_channels: int, length: int):
        if n_channels < 2:
            raise ConfigError(f"need at least 2 channels, got {n_channels}")
        if length < 1:
            raise ConfigError(f"window length must be >= 1, got {length}")
        self.n_channels = int(n_channels)
        self.length = int(length)
        # flat layout: [newest column; next; ...; oldest], each column n_channels wide
        self._flat = np.zeros(self.n_channels * self.length)
        # per-column channel index (1-based, 0 = empty) and sign, oldest last
        self.channels = np.zeros(self.length, dtype=np.int64)
        self.signs = np.zeros(self.length, dtype=np.int8)

    def push(self, action: int, reward: int) -> None:
        """Shift all columns one slot older and record (action, reward) as newest."""
        n = self.n_channels
        if not 1 <= action <= n:
            raise ActionError(f"channel {action} outside 1..{n}")
        if reward not in (-1, 1):
            raise ActionError(f"reward must be -1 or +1, got {reward}")
        flat = np.empty_like(self._flat)
        flat[n:] = self._flat[:-n]
        flat[:n] = 0.0
        flat[action - 1] = float(reward)
        self._flat = flat
        channels = np.empty_like(self.channels)
        signs = np.empty_like(self.signs)
        channels[1:] = self.channels[:-1]
        signs[1:] = self.signs[:-1]
        channels[0] = action
        signs[0] = reward
        self.channels = channels
        self.signs = signs

    def active(self):
        """(flat indices, values) of the nonzero entries; at most one per column."""
        cols = np.nonzero(self.channels)[0]
        idx = cols * self.n_channels + self.channels[cols] - 1
        return idx, self.signs[cols].astype(np.float64)

    def flat(self) -> np.ndarray:
        """Current network input; treat as read-only (a fresh array replaces it on push)."""
        return self._flat

    @property
    def matrix(self) -> np.ndarray:
        """N x M view with column 0 newest; equals flat() reshaped column-major."""
        return self._flat.reshape(self.length, self.n_channels).T

    def clone(self) -> "ObservationWindow":
        w = ObservationWindow(self.n_channels, self.length)
        w._flat = self._flat.copy()
        w.channels = self.channels.copy()
        w.signs = self.signs.copy()
        return w
