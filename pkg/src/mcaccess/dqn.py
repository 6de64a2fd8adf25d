"""DQN baseline: Q-network with two hidden layers, FIFO replay, target net.

Transitions are stored compactly: a window column is at most one signed
channel index, so a stored transition is the current window's (channel,
sign) pairs plus the action and reward, and the successor window is
reconstructed by shifting. This keeps a 100k-transition buffer at a few
megabytes even for 64 channels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericError, ShapeError
from .nets import (AdamUpdater, LrSchedule, Mlp, IDENTITY, RELU, apply,
                   init_mlp)
from .observation import ObservationWindow
from .actor_critic import OPTIMIZERS


class ReplayBuffer:
    """Fixed-capacity FIFO ring over (window, action, reward) records.

    The successor window of a record is implied: it is the stored window
    shifted one slot older with (action, reward) as the newest column,
    exactly how the agent's own window evolves.
    """

    def __init__(self, capacity: int, n_channels: int, window: int):
        if capacity < 1:
            raise ConfigError(f"capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self.n_channels = int(n_channels)
        self.window = int(window)
        self._chan = np.zeros((self.capacity, self.window), dtype=np.int16)
        self._sign = np.zeros((self.capacity, self.window), dtype=np.int8)
        self._action = np.zeros(self.capacity, dtype=np.int16)
        self._reward = np.zeros(self.capacity, dtype=np.int8)
        self._next = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, window: ObservationWindow, action: int, reward: int) -> None:
        if window.n_channels != self.n_channels or window.length != self.window:
            raise ShapeError("window shape does not match this buffer")
        i = self._next
        self._chan[i] = window.channels
        self._sign[i] = window.signs
        self._action[i] = action
        self._reward[i] = reward
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def _decode(self, chan: np.ndarray, sign: np.ndarray) -> np.ndarray:
        """Dense (batch, n*m) inputs from compact columns, newest column first."""
        b = chan.shape[0]
        flat = np.zeros((b, self.n_channels * self.window))
        rows, cols = np.nonzero(chan)
        flat[rows, cols * self.n_channels + chan[rows, cols] - 1] = sign[rows, cols]
        return flat

    def sample(self, batch: int, rng: np.random.Generator):
        """Uniform with-replacement minibatch: (windows, actions, rewards, next_windows)."""
        if self.size < 1:
            raise ConfigError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, size=batch)
        chan, sign = self._chan[idx], self._sign[idx]
        actions = self._action[idx].astype(np.int64)
        rewards = self._reward[idx].astype(np.float64)
        next_chan = np.concatenate([actions[:, None], chan[:, :-1]], axis=1)
        next_sign = np.concatenate([self._reward[idx][:, None], sign[:, :-1]], axis=1)
        return self._decode(chan, sign), actions, rewards, self._decode(next_chan, next_sign)

    def stored(self):
        """Compact view of live records in insertion order (oldest first); for tests."""
        if self.size < self.capacity:
            order = np.arange(self.size)
        else:
            order = (np.arange(self.capacity) + self._next) % self.capacity
        return self._chan[order], self._sign[order], self._action[order], self._reward[order]


@dataclass
class DqnConfig:
    n_channels: int
    window: int = 0
    gamma: float = 0.4
    hidden_units: tuple = (200, 200)
    minibatch: int = 32
    lr: LrSchedule = field(default_factory=lambda: LrSchedule(0.0005))
    epsilon_start: float = 0.9
    epsilon_end: float = 0.02
    epsilon_decay_slots: int = 10000
    target_sync_period: int = 500
    warmup: int = 500
    capacity: int = 100_000
    optimizer: str = "adam"
    init_seed: int = 0
    action_seed: int = 0

    def __post_init__(self):
        if self.n_channels < 2:
            raise ConfigError(f"need at least 2 channels, got {self.n_channels}")
        if self.window == 0:
            self.window = self.n_channels
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"gamma must lie strictly inside (0, 1), got {self.gamma}")
        if not (0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0):
            raise ConfigError("need 0 <= epsilon_end <= epsilon_start <= 1")
        if self.epsilon_decay_slots < 1 or self.target_sync_period < 1:
            raise ConfigError("epsilon_decay_slots and target_sync_period must be >= 1")
        if self.minibatch < 1 or self.warmup < self.minibatch:
            raise ConfigError("warmup must be at least the minibatch size")
        if self.capacity < self.warmup:
            raise ConfigError("capacity must be at least the warmup size")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer must be one of {OPTIMIZERS}")


def epsilon_greedy(q_values: np.ndarray, epsilon: float,
                   rng: np.random.Generator) -> int:
    """1-based channel: uniform with probability epsilon, else argmax (lowest ties)."""
    if not 0.0 <= epsilon <= 1.0:
        raise ConfigError(f"epsilon must be in [0, 1], got {epsilon}")
    if rng.random() < epsilon:
        return int(rng.integers(len(q_values))) + 1
    return int(np.argmax(q_values)) + 1


def compute_targets(target_net: Mlp, next_windows: np.ndarray, rewards: np.ndarray,
                    gamma: float) -> np.ndarray:
    """y = r + gamma * max_a Q_target(next window, a); only the frozen net is read."""
    q_next, _ = target_net.forward(next_windows)
    return rewards + gamma * q_next.max(axis=1)


class DqnAgent:

    def __init__(self, config: DqnConfig):
        self.config = config
        n, m = config.n_channels, config.window
        dims = [n * m, *config.hidden_units, n]
        acts = [RELU] * len(config.hidden_units) + [IDENTITY]
        self.qnet = init_mlp(dims, acts, np.random.SeedSequence(config.init_seed))
        self.target = self.qnet.clone()
        self.window = ObservationWindow(n, m)
        self.buffer = ReplayBuffer(config.capacity, n, m)
        action_ss, sample_ss = np.random.SeedSequence(config.action_seed).spawn(2)
        self.action_rng = np.random.default_rng(action_ss)
        self.sample_rng = np.random.default_rng(sample_ss)
        self.step_counter = 0
        self.sync_count = 0
        self.last_loss = 0.0
        self._opt = AdamUpdater(self.qnet) if config.optimizer == "adam" else None

    @property
    def n_channels(self) -> int:
        return self.config.n_channels

    def epsilon_at(self, t: int) -> float:
        """Linear decay from epsilon_start to epsilon_end over epsilon_decay_slots."""
        c = self.config
        frac = min(1.0, max(0.0, t / c.epsilon_decay_slots))
        return c.epsilon_start + (c.epsilon_end - c.epsilon_start) * frac

    def q_values(self, flat: np.ndarray) -> np.ndarray:
        q, _ = self.qnet.forward(flat)
        if not np.isfinite(q).all():
            raise NumericError("Q network produced non-finite values")
        return q

    def select_action(self, epsilon: float | None = None) -> int:
        eps = self.epsilon_at(self.step_counter) if epsilon is None else epsilon
        return epsilon_greedy(self.q_values(self.window.flat()), eps, self.action_rng)

    def q_update(self, windows: np.ndarray, actions: np.ndarray, rewards: np.ndarray,
                 next_windows: np.ndarray, t: int) -> float:
        """One step down the mean squared error to the frozen-target values."""
        y = compute_targets(self.target, next_windows, rewards, self.config.gamma)
        q, cache = self.qnet.forward(windows)
        b = len(actions)
        taken = q[np.arange(b), actions - 1]
        residual = taken - y
        out_grad = np.zeros_like(q)
        out_grad[np.arange(b), actions - 1] = 2.0 * residual / b
        grads = self.qnet.backward(cache, out_grad)
        rate = self.config.lr.rate_at(t)
        if self._opt is not None:
            self._opt.step(self.qnet, grads, rate, "descent")
        else:
            apply(self.qnet, grads, rate, "descent")
        self.last_loss = float(np.mean(residual ** 2))
        return self.last_loss

    def sync_target(self) -> None:
        self.target.copy_from(self.qnet)
        self.sync_count += 1

    def train_step(self, env) -> int:
        """Select, sense, store; replay a minibatch once warm; maybe sync target."""
        t = self.step_counter
        action = self.select_action()
        reward = env.sense(action)
        self.buffer.push(self.window, action, reward)
        self.window.push(action, reward)
        if self.buffer.size >= self.config.warmup:
            batch = self.buffer.sample(self.config.minibatch, self.sample_rng)
            self.q_update(*batch, t)
        if (t + 1) % self.config.target_sync_period == 0:
            self.sync_target()
        env.step()
        self.step_counter += 1
        return reward
