"""Experiment drivers: sweep, arbitrary orders, time-varying, runtime study.

Each experiment cell owns a fresh environment, agent, and RNG streams whose
seeds derive deterministically from the master seed and the cell
coordinates, so results are reproducible regardless of worker count or
completion order. Rows are sorted before emission and every CSV starts
with the resolved configuration.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .actor_critic import AcAgent, AcAgentConfig
from .baselines import GenieAgent, RandomAgent
from .config import RunConfig
from .dqn import DqnAgent, DqnConfig
from .env import (ChannelEnv, PatternSpec, TimeVaryingEnv, TimeVaryingSchedule)
from .errors import ConfigError
from .metrics import MetricSeries
from .nets import LrSchedule

# stream labels keep env/init/action seeds from one cell uncorrelated
_STREAMS = {"env": 0, "init": 1, "action": 2}


def derive_seed(master: int, *coords: int) -> dict:
    """Three named RNG seeds for one experiment cell, from master + coordinates."""
    words = np.random.SeedSequence([int(master), *[int(c) for c in coords]]).generate_state(3)
    return {name: int(words[i]) for name, i in _STREAMS.items()}


def _pattern_spec(cfg: RunConfig, n_channels: int, p: float, order_seed: int) -> PatternSpec:
    return PatternSpec(kind=cfg.pattern, n_channels=n_channels, p=p,
                       n_subsets=cfg.subsets, order_seed=order_seed)


def build_agent(cfg: RunConfig, kind: str, n_channels: int,
                init_seed: int, action_seed: int):
    if kind == "ac":
        return AcAgent(AcAgentConfig(
            n_channels=n_channels, window=cfg.window, gamma=cfg.gamma,
            hidden_units=cfg.hidden,
            actor_lr=LrSchedule(cfg.actor_lr, cfg.lr_decay, cfg.lr_interval),
            critic_lr=LrSchedule(cfg.critic_lr, cfg.lr_decay, cfg.lr_interval),
            selection_mode=cfg.selection, optimizer=cfg.optimizer,
            init_seed=init_seed, action_seed=action_seed))
    if kind == "dqn":
        return DqnAgent(DqnConfig(
            n_channels=n_channels, window=cfg.window, gamma=cfg.gamma,
            hidden_units=tuple(cfg.dqn_hidden), minibatch=cfg.dqn_minibatch,
            lr=LrSchedule(cfg.dqn_lr, cfg.lr_decay, cfg.lr_interval),
            epsilon_start=cfg.dqn_eps_start, epsilon_end=cfg.dqn_eps_end,
            epsilon_decay_slots=cfg.dqn_eps_slots, target_sync_period=cfg.dqn_sync,
            warmup=cfg.dqn_warmup, capacity=cfg.dqn_capacity,
            optimizer=cfg.optimizer, init_seed=init_seed, action_seed=action_seed))
    if kind == "genie":
        return GenieAgent()
    if kind == "random":
        return RandomAgent(n_channels, action_seed)
    raise ConfigError(f"unknown agent kind {kind!r}")


AC_LOG_COLUMNS = ["t", "action", "reward", "delta", "actor_lr", "critic_lr"]
DQN_LOG_COLUMNS = ["t", "action", "reward", "epsilon", "loss"]


def _log_row(agent, t: int, reward: int, aux):
    """Per-slot log row; the newest window column holds the action just taken."""
    action = int(agent.window.channels[0])
    if isinstance(agent, AcAgent):
        return (t, action, reward, float(aux),
                agent.config.actor_lr.rate_at(t), agent.config.critic_lr.rate_at(t))
    return (t, action, reward, agent.epsilon_at(t), agent.last_loss)


def run_slots(agent, env, slots: int, log: list | None = None) -> np.ndarray:
    """Drive agent.train_step for a number of slots; returns the reward log."""
    rewards = np.empty(slots, dtype=np.int8)
    for i in range(slots):
        t = agent.step_counter
        out = agent.train_step(env)
        if isinstance(out, tuple):
            reward, aux = out
        else:
            reward, aux = out, None
        rewards[i] = reward
        if log is not None:
            log.append(_log_row(agent, t, reward, aux))
    return rewards


def run_training_cell(cfg: RunConfig, pattern: PatternSpec, *coords: int,
                      slots: int | None = None, log: list | None = None):
    """Train one agent on one fresh chain; returns (MetricSeries, agent)."""
    seeds = derive_seed(cfg.seed, *coords)
    env = ChannelEnv(pattern.build(), seeds["env"])
    agent = build_agent(cfg, cfg.agent, pattern.n_channels,
                        seeds["init"], seeds["action"])
    rewards = run_slots(agent, env, cfg.T if slots is None else slots, log=log)
    return MetricSeries(rewards), agent


def run_baseline(pattern: PatternSpec, kind: str, slots: int, seed: int) -> MetricSeries:
    """Genie or random policy on a fresh chain; calibration bracket for experiments."""
    seeds = derive_seed(seed, pattern.n_channels, round(pattern.p * 10_000))
    env = ChannelEnv(pattern.build(), seeds["env"])
    agent = GenieAgent() if kind == "genie" else RandomAgent(pattern.n_channels,
                                                             seeds["action"])
    return MetricSeries(run_slots(agent, env, slots))


# ---------------------------------------------------------------- sweeps

def _sweep_cell(args):
    cfg, n, p_idx, seed_idx = args
    p = cfg.p[p_idx]
    pattern = _pattern_spec(cfg, n, p, cfg.order_seed)
    series, _ = run_training_cell(cfg, pattern, n, round(p * 10_000), seed_idx)
    return (n, p, seed_idx, series.final_average(cfg.eval_fraction))


def _pool_map(fn, jobs, workers: int):
    if workers == 0:
        workers = os.cpu_count() or 1
    workers = min(workers, len(jobs)) or 1
    if workers == 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def run_round_robin_sweep(cfg: RunConfig) -> list[tuple]:
    """(n_channels, p, seed, final average) per cell, sorted."""
    jobs = [(cfg, n, p_idx, k)
            for n in cfg.channels
            for p_idx in range(len(cfg.p))
            for k in range(cfg.n_seeds)]
    rows = _pool_map(_sweep_cell, jobs, cfg.workers)
    return sorted(rows)


def _order_cell(args):
    cfg, n, order_idx = args
    order_seed = cfg.order_seed + order_idx
    pattern = PatternSpec(kind="arbitrary", n_channels=n, p=cfg.p[0],
                          order_seed=order_seed)
    series, _ = run_training_cell(cfg, pattern, n, order_seed)
    return (order_seed, series.final_average(cfg.eval_fraction))


def run_arbitrary_orders(cfg: RunConfig) -> list[tuple]:
    """(order_seed, final average) for n_orders seeded random cycles, sorted."""
    n = cfg.channels[0]
    jobs = [(cfg, n, i) for i in range(cfg.n_orders)]
    return sorted(_pool_map(_order_cell, jobs, cfg.workers))


# ---------------------------------------------------------- time-varying

def run_time_varying(cfg: RunConfig, log: list | None = None):
    """Windowed averages across an unannounced pattern change.

    The agent first trains on the opening pattern for cfg.pretrain slots
    (excluded from the emitted series); the change then lands change_at
    slots into the emitted phase. Returns (rows, agent) where each row is
    (window_index, windowed average, changed flag).
    """
    n = cfg.channels[0]
    p = cfg.p[0]
    first = _pattern_spec(cfg, n, p, cfg.order_seed)
    second = _pattern_spec(cfg, n, p, cfg.order_seed + 1)
    schedule = TimeVaryingSchedule([(0, first),
                                    (cfg.pretrain + cfg.change_at, second)])
    seeds = derive_seed(cfg.seed, n, round(p * 10_000), cfg.order_seed)
    env = TimeVaryingEnv(schedule, seeds["env"])
    agent = build_agent(cfg, cfg.agent, n, seeds["init"], seeds["action"])
    run_slots(agent, env, cfg.pretrain, log=log)
    emitted = MetricSeries(run_slots(agent, env, cfg.emit, log=log))
    rows = []
    for k, avg in enumerate(emitted.windowed(cfg.window_len)):
        changed = int(k * cfg.window_len <= cfg.change_at < (k + 1) * cfg.window_len)
        rows.append((k, float(avg), changed))
    return rows, agent


# ---------------------------------------------------------------- runtime

def percent_reduced(dqn_seconds: float, ac_seconds: float) -> float:
    """100 * (t_dqn - t_ac) / t_dqn."""
    return 100.0 * (dqn_seconds - ac_seconds) / dqn_seconds


def _time_agent(cfg: RunConfig, kind: str, n: int) -> tuple[float, float]:
    """(seconds per train step, seconds per forward-only decision)."""
    seeds = derive_seed(cfg.seed, n, {"ac": 1, "dqn": 2}[kind])
    pattern = _pattern_spec(cfg, n, cfg.p[0], cfg.order_seed)
    env = ChannelEnv(pattern.build(), seeds["env"])
    agent = build_agent(cfg, kind, n, seeds["init"], seeds["action"])
    for _ in range(cfg.bench_warmup):
        agent.train_step(env)
    t0 = time.perf_counter()
    for _ in range(cfg.bench_steps):
        agent.train_step(env)
    per_step = (time.perf_counter() - t0) / cfg.bench_steps
    forward_reps = max(1, cfg.bench_steps // 10)
    t0 = time.perf_counter()
    for _ in range(forward_reps):
        agent.select_action()
    per_forward = (time.perf_counter() - t0) / forward_reps
    return per_step, per_forward


def measure_runtime(cfg: RunConfig) -> list[tuple]:
    """Per-decision wall time for AC and DQN at each channel count.

    Runs strictly serially (timing must not share cores). Rows:
    (n_channels, agent, sec_per_decision, percent_reduced, sec_forward_only);
    the reduction is reported on the AC row of each channel count.
    """
    rows = []
    for n in cfg.channels:
        ac_step, ac_fwd = _time_agent(cfg, "ac", n)
        dqn_step, dqn_fwd = _time_agent(cfg, "dqn", n)
        rows.append((n, "ac", ac_step, percent_reduced(dqn_step, ac_step), ac_fwd))
        rows.append((n, "dqn", dqn_step, float("nan"), dqn_fwd))
    return rows


# ------------------------------------------------------------------- CSV

def write_csv(path, cfg: RunConfig, columns: list[str], rows: list[tuple]) -> None:
    """Header block of resolved key=value pairs, then column names, then rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {k}={v}" for k, v in cfg.resolved().items()]
    lines.append(",".join(columns))
    for row in rows:
        cells = []
        for value in row:
            if isinstance(value, float):
                cells.append("nan" if value != value else f"{value:.6f}")
            else:
                cells.append(str(value))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")
