"""Reference policies that bracket achievable performance.

RandomAgent senses uniformly; its long-run average is 2k/N - 1 for chains
with k good channels per state. GenieAgent reads the chain state revealed
at the end of each slot and bets on the likelier of switch/stay, which
attains 2*max(p, 1-p) - 1 on any single-cycle chain and upper-bounds every
policy that learns only from sensing.
"""

from __future__ import annotations

import numpy as np


class RandomAgent:

    def __init__(self, n_channels: int, action_seed: int = 0):
        self.n_channels = int(n_channels)
        self.rng = np.random.default_rng(action_seed)
        self.step_counter = 0

    def select_action(self) -> int:
        return int(self.rng.integers(self.n_channels)) + 1

    def train_step(self, env) -> int:
        reward = env.sense(self.select_action())
        env.step()
        self.step_counter += 1
        return reward


class GenieAgent:
    """Knows the chain layout and the state revealed after each slot's transition.

    At decision time the current state has already advanced once since the
    last reveal, so the genie predicts: successor if p >= 0.5, else the
    revealed state itself, and senses any good channel of the prediction.
    If the environment swaps chains (time-varying runs) the genie is given
    the new chain and its state, modelling full knowledge of the new pattern.
    """

    def __init__(self):
        self.step_counter = 0
        self._chain = None
        self._revealed = None

    def _resync(self, env) -> None:
        if self._chain is not env.chain:
            self._chain = env.chain
            self._revealed = env.state_index

    def select_action(self, env) -> int:
        self._resync(env)
        chain = self._chain
        if chain.p >= 0.5:
            predicted = int(chain.successor[self._revealed])
        else:
            predicted = self._revealed
        return int(np.argmax(chain.states[predicted])) + 1

    def train_step(self, env) -> int:
        reward = env.sense(self.select_action(env))
        self._revealed = env.state_index
        env.step()
        self.step_counter += 1
        return reward
