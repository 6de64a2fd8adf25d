"""Dynamic multichannel access: Markov-switching channel simulator plus
actor-critic and DQN sensing agents, with an experiment harness and CLI."""

__version__ = "0.1.0"

from .env import (ChannelEnv, MarkovChannelChain, PatternSpec, TimeVaryingEnv,
                  TimeVaryingSchedule, genie_average_reward, make_arbitrary,
                  make_correlated_subsets, make_round_robin, sense)
from .nets import LrSchedule, Mlp, init_mlp, softmax
from .observation import ObservationWindow
from .actor_critic import AcAgent, AcAgentConfig, td_error
from .dqn import DqnAgent, DqnConfig, ReplayBuffer, epsilon_greedy
from .baselines import GenieAgent, RandomAgent
from .metrics import MetricSeries

__all__ = [
    "AcAgent", "AcAgentConfig", "ChannelEnv", "DqnAgent", "DqnConfig",
    "GenieAgent", "LrSchedule", "MarkovChannelChain", "MetricSeries", "Mlp",
    "ObservationWindow", "PatternSpec", "RandomAgent", "ReplayBuffer",
    "TimeVaryingEnv", "TimeVaryingSchedule", "epsilon_greedy",
    "genie_average_reward", "init_mlp", "make_arbitrary",
    "make_correlated_subsets", "make_round_robin", "sense", "softmax",
    "td_error", "__version__",
]
