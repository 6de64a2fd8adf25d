"""Multichannel environment: N binary channels whose joint state follows a Markov chain.

The joint channel state is one of a small list of state vectors. Every slot
the chain either advances to its successor state (probability p) or stays
put (probability 1-p). Sensing a channel yields +1 if that channel is good,
-1 otherwise. Channel indices are 1-based at this surface.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ActionError, ConfigError


def _check_p(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"switching probability p must be in [0, 1], got {p}")
    return p


def _check_n_channels(n_channels: int) -> int:
    n = int(n_channels)
    if n < 2:
        raise ConfigError(f"need at least 2 channels, got {n_channels}")
    return n


@dataclass
class MarkovChannelChain:
    """State list plus a single-cycle successor map and a switching probability.

    states[k] is a 0/1 vector of length n_channels; successor[k] is the index
    the chain moves to when it switches. The successor map must form one
    cycle covering every state, so every state stays reachable.
    """

    states: np.ndarray      # (n_states, n_channels) uint8
    successor: np.ndarray   # (n_states,) int64
    p: float
    current: int = 0

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.uint8)
        self.successor = np.asarray(self.successor, dtype=np.int64)
        self.p = _check_p(self.p)
        if self.states.ndim != 2 or self.states.shape[0] < 1:
            raise ConfigError("chain needs a (n_states, n_channels) state table")
        n_states, n_channels = self.states.shape
        _check_n_channels(n_channels)
        if n_states > 2 ** n_channels:
            raise ConfigError(f"{n_states} states exceeds 2^{n_channels}")
        if not np.isin(self.states, (0, 1)).all():
            raise ConfigError("channel states must be 0 or 1")
        if self.successor.shape != (n_states,) or not self._is_single_cycle():
            raise ConfigError("successor map must be one cycle over all states")
        if not 0 <= self.current < n_states:
            raise ConfigError(f"current state index {self.current} out of range")

    def _is_single_cycle(self) -> bool:
        seen = 0
        k = 0
        for _ in range(len(self.successor)):
            nxt = self.successor[k]
            if not 0 <= nxt < len(self.successor):
                return False
            k = int(nxt)
            seen += 1
        return k == 0 and seen == len(self.successor)

    @property
    def n_channels(self) -> int:
        return self.states.shape[1]

    @property
    def n_states(self) -> int:
        return self.states.shape[0]

    def state_vector(self) -> np.ndarray:
        """Copy of the current joint channel state."""
        return self.states[self.current].copy()


def make_round_robin(n_channels: int, p: float) -> MarkovChannelChain:
    """Single good channel cycling 1 -> 2 -> ... -> N -> 1."""
    n = _check_n_channels(n_channels)
    states = np.eye(n, dtype=np.uint8)
    successor = (np.arange(n) + 1) % n
    return MarkovChannelChain(states, successor, p)


def make_arbitrary(n_channels: int, p: float, order_seed: int) -> MarkovChannelChain:
    """Single good channel visiting all N positions in a seeded random cycle."""
    n = _check_n_channels(n_channels)
    p = _check_p(p)
    rng = np.random.default_rng(order_seed)
    ring = rng.permutation(n)
    successor = np.empty(n, dtype=np.int64)
    successor[ring] = np.roll(ring, -1)
    return MarkovChannelChain(np.eye(n, dtype=np.uint8), successor, p)


def make_correlated_subsets(n_channels: int, n_subsets: int, p: float,
                            order_seed: int) -> MarkovChannelChain:
    """Channels split into equal subsets; one whole subset is good per state.

    The partition and the cycle over subsets both come from order_seed, so a
    seed fully determines the chain.
    """
    n = _check_n_channels(n_channels)
    p = _check_p(p)
    k = int(n_subsets)
    if k < 1 or n % k != 0:
        raise ConfigError(f"{n} channels not divisible into {n_subsets} subsets")
    size = n // k
    rng = np.random.default_rng(order_seed)
    shuffled = rng.permutation(n)
    states = np.zeros((k, n), dtype=np.uint8)
    for s in range(k):
        states[s, shuffled[s * size:(s + 1) * size]] = 1
    ring = rng.permutation(k)
    successor = np.empty(k, dtype=np.int64)
    successor[ring] = np.roll(ring, -1)
    return MarkovChannelChain(states, successor, p)


_PATTERN_BUILDERS = ("round_robin", "arbitrary", "correlated_subsets")


@dataclass
class PatternSpec:
    """Declarative chain description, buildable on demand."""

    kind: str
    n_channels: int
    p: float
    n_subsets: int = 0
    order_seed: int = 0

    def __post_init__(self):
        if self.kind not in _PATTERN_BUILDERS:
            raise ConfigError(f"unknown pattern kind {self.kind!r}")

    def build(self) -> MarkovChannelChain:
        if self.kind == "round_robin":
            return make_round_robin(self.n_channels, self.p)
        if self.kind == "arbitrary":
            return make_arbitrary(self.n_channels, self.p, self.order_seed)
        return make_correlated_subsets(self.n_channels, self.n_subsets,
                                       self.p, self.order_seed)


@dataclass
class TimeVaryingSchedule:
    """Sequence of (start_slot, pattern) segments; first must start at 0."""

    segments: list[tuple[int, PatternSpec]] = field(default_factory=list)

    def __post_init__(self):
        if not self.segments:
            raise ConfigError("schedule needs at least one segment")
        starts = [int(s) for s, _ in self.segments]
        if starts[0] != 0:
            raise ConfigError("first segment must start at slot 0")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ConfigError("segment start slots must strictly increase")
        n = {spec.n_channels for _, spec in self.segments}
        if len(n) != 1:
            raise ConfigError("all segments must share the channel count")


def sense(state_vector: np.ndarray, channel: int) -> int:
    """Reward for sensing a 1-based channel of a state vector: +1 good, -1 bad."""
    n = len(state_vector)
    if not 1 <= channel <= n:
        raise ActionError(f"channel {channel} outside 1..{n}")
    return 1 if state_vector[channel - 1] else -1


def genie_average_reward(p: float) -> float:
    """Steady-state average reward of a state-aware single-good-chain policy.

    A policy that knows the chain state before the next transition can only
    bet on "switch" or "stay", so its per-slot success probability is
    max(p, 1-p).
    """
    p = _check_p(p)
    return 2.0 * max(p, 1.0 - p) - 1.0


class ChannelEnv:
    """A chain plus its own RNG; the mutable simulation surface for agents.

    One instance per training loop. reset() draws the initial state uniformly;
    step() applies one switch/stay transition; sense() reads a channel of the
    current state. The slot loop used throughout the package senses first and
    steps afterwards, so an agent decides before the next transition happens.
    """

    def __init__(self, chain: MarkovChannelChain, seed: int):
        self.chain = chain
        self.seed = int(seed)
        self.rng = np.random.default_rng(self.seed)
        self.reset()

    @property
    def n_channels(self) -> int:
        return self.chain.n_channels

    @property
    def state_index(self) -> int:
        return self.chain.current

    def reset(self) -> np.ndarray:
        self.chain.current = int(self.rng.integers(self.chain.n_states))
        return self.chain.state_vector()

    def sense(self, channel: int) -> int:
        return sense(self.chain.states[self.chain.current], channel)

    def step(self) -> np.ndarray:
        if self.rng.random() < self.chain.p:
            self.chain.current = int(self.chain.successor[self.chain.current])
        return self.chain.state_vector()


class TimeVaryingEnv:
    """ChannelEnv variant that swaps chains at schedule boundaries.

    Slot counting starts at 0 and advances on step(); when the new slot index
    equals a segment start, the segment's chain replaces the current one with
    a fresh uniformly drawn state. Nothing about the swap is visible through
    sense().
    """

    def __init__(self, schedule: TimeVaryingSchedule, seed: int):
        self.schedule = schedule
        self.seed = int(seed)
        self.rng = np.random.default_rng(self.seed)
        self.slot = 0
        self._starts = [int(s) for s, _ in schedule.segments]
        self.chain = schedule.segments[0][1].build()
        self.chain.current = int(self.rng.integers(self.chain.n_states))

    @property
    def n_channels(self) -> int:
        return self.chain.n_channels

    @property
    def state_index(self) -> int:
        return self.chain.current

    def sense(self, channel: int) -> int:
        return sense(self.chain.states[self.chain.current], channel)

    def step(self) -> np.ndarray:
        self.slot += 1
        if self.slot in self._starts:
            spec = self.schedule.segments[self._starts.index(self.slot)][1]
            self.chain = spec.build()
            self.chain.current = int(self.rng.integers(self.chain.n_states))
        elif self.rng.random() < self.chain.p:
            self.chain.current = int(self.chain.successor[self.chain.current])
        return self.chain.state_vector()
