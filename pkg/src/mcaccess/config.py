"""Run configuration: key=value files, flag overrides, scenario defaults.

The file format is one `key=value` per line with `#` comments. Every key
has a typed entry in the registry below; unknown keys are rejected with
the offending line number so typos never pass silently. Flags override
file values. The fully resolved configuration is echoed into the header
of every output file.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError

SCENARIOS = ("round_robin_sweep", "arbitrary_orders", "time_varying", "runtime")
AGENTS = ("ac", "dqn", "genie", "random")
PATTERNS = ("round_robin", "arbitrary", "correlated_subsets")


def _parse_int(text: str) -> int:
    return int(text, 10)


def _parse_float(text: str) -> float:
    value = float(text)
    if value != value:
        raise ValueError("nan is not a valid value")
    return value


def _parse_int_list(text: str) -> list[int]:
    return [int(part, 10) for part in text.split(",") if part.strip() != ""]


def _parse_float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip() != ""]


def _parse_str(text: str) -> str:
    return text


# key -> parser; every RunConfig field appears here
_PARSERS = {
    "scenario": _parse_str,
    "agent": _parse_str,
    "pattern": _parse_str,
    "channels": _parse_int_list,
    "subsets": _parse_int,
    "p": _parse_float_list,
    "order_seed": _parse_int,
    "n_orders": _parse_int,
    "T": _parse_int,
    "n_seeds": _parse_int,
    "seed": _parse_int,
    "window": _parse_int,
    "window_len": _parse_int,
    "gamma": _parse_float,
    "hidden": _parse_int,
    "optimizer": _parse_str,
    "selection": _parse_str,
    "actor_lr": _parse_float,
    "critic_lr": _parse_float,
    "lr_decay": _parse_float,
    "lr_interval": _parse_int,
    "dqn_lr": _parse_float,
    "dqn_hidden": _parse_int_list,
    "dqn_capacity": _parse_int,
    "dqn_minibatch": _parse_int,
    "dqn_eps_start": _parse_float,
    "dqn_eps_end": _parse_float,
    "dqn_eps_slots": _parse_int,
    "dqn_sync": _parse_int,
    "dqn_warmup": _parse_int,
    "pretrain": _parse_int,
    "change_at": _parse_int,
    "emit": _parse_int,
    "eval_fraction": _parse_float,
    "bench_steps": _parse_int,
    "bench_warmup": _parse_int,
    "workers": _parse_int,
    "out": _parse_str,
    "train_log": _parse_str,
}

# scenario-dependent channel lists; applied only when the key is absent
_CHANNEL_DEFAULTS = {
    "round_robin_sweep": [16, 32, 64],
    "arbitrary_orders": [16],
    "time_varying": [32],
    "runtime": [16, 32, 64],
}
_P_DEFAULTS = {
    "round_robin_sweep": [0.75, 0.80, 0.85, 0.90, 0.95],
    "arbitrary_orders": [0.9],
    "time_varying": [0.9],
    "runtime": [0.9],
}
_PATTERN_DEFAULTS = {
    "round_robin_sweep": "round_robin",
    "arbitrary_orders": "arbitrary",
    "time_varying": "correlated_subsets",
    "runtime": "round_robin",
}


@dataclass
class RunConfig:
    scenario: str = "round_robin_sweep"
    agent: str = "ac"
    pattern: str = ""                  # "" means the scenario's natural pattern
    channels: list = None
    subsets: int = 8
    p: list = None
    order_seed: int = 1
    n_orders: int = 10
    T: int = 50_000
    n_seeds: int = 5
    seed: int = 0
    window: int = 0                    # 0 means window = n_channels
    window_len: int = 500
    gamma: float = 0.4
    hidden: int = 200
    optimizer: str = "adam"
    selection: str = "sample"
    actor_lr: float = 0.001
    critic_lr: float = 0.01
    lr_decay: float = 0.95
    lr_interval: int = 5000
    dqn_lr: float = 0.001
    dqn_hidden: list = None
    dqn_capacity: int = 100_000
    dqn_minibatch: int = 32
    dqn_eps_start: float = 0.9
    dqn_eps_end: float = 0.02
    dqn_eps_slots: int = 10_000
    dqn_sync: int = 500
    dqn_warmup: int = 500
    pretrain: int = 50_000
    change_at: int = 500
    emit: int = 50_000
    eval_fraction: float = 0.2
    bench_steps: int = 10_000
    bench_warmup: int = 1_000
    workers: int = 0                   # 0 means one per CPU
    out: str = "out"
    train_log: str = ""                # per-slot CSV name under out; "" disables

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.agent not in AGENTS:
            raise ConfigError(f"agent must be one of {AGENTS}, got {self.agent!r}")
        if self.channels is None:
            self.channels = list(_CHANNEL_DEFAULTS[self.scenario])
        if self.p is None:
            self.p = list(_P_DEFAULTS[self.scenario])
        if self.pattern == "":
            self.pattern = _PATTERN_DEFAULTS[self.scenario]
        if self.pattern not in PATTERNS:
            raise ConfigError(f"pattern must be one of {PATTERNS}, got {self.pattern!r}")
        if self.dqn_hidden is None:
            self.dqn_hidden = [200, 200]
        for key in ("channels", "dqn_hidden"):
            if not getattr(self, key):
                raise ConfigError(f"{key} must not be empty")
        if any(n < 2 for n in self.channels):
            raise ConfigError(f"channels entries must be >= 2, got {self.channels}")
        if any(not 0.0 <= q <= 1.0 for q in self.p):
            raise ConfigError(f"p entries must lie in [0, 1], got {self.p}")
        for key in ("T", "n_seeds", "n_orders", "window_len", "lr_interval",
                    "dqn_capacity", "dqn_minibatch", "dqn_eps_slots", "dqn_sync",
                    "dqn_warmup", "change_at", "emit", "bench_steps", "bench_warmup"):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be >= 1, got {getattr(self, key)}")
        for key in ("pretrain", "window", "workers"):
            if getattr(self, key) < 0:
                raise ConfigError(f"{key} must be >= 0, got {getattr(self, key)}")
        if not 0.0 < self.eval_fraction <= 1.0:
            raise ConfigError(f"eval_fraction must be in (0, 1], got {self.eval_fraction}")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"gamma must lie strictly inside (0, 1), got {self.gamma}")
        if self.T < self.window_len:
            raise ConfigError(f"T ({self.T}) must cover one averaging window "
                              f"({self.window_len})")
        if self.emit < self.window_len:
            raise ConfigError(f"emit ({self.emit}) must cover one averaging window "
                              f"({self.window_len})")

    def resolved(self) -> dict:
        """Flat, sorted, string-valued mapping for output headers."""
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, list):
                out[f.name] = ",".join(str(v) for v in value)
            else:
                out[f.name] = str(value)
        return dict(sorted(out.items()))


def _parse_pair(raw: str, where: str):
    if "=" not in raw:
        raise ConfigError(f"{where}: expected key=value, got {raw!r}")
    key, _, value = raw.partition("=")
    key, value = key.strip(), value.strip()
    if key not in _PARSERS:
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        return key, _PARSERS[key](value)
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key!r}: {exc}") from None


def parse_config(path: str | Path | None, overrides: list[str] = ()) -> RunConfig:
    """Resolve file plus `key=value` override strings into a validated RunConfig."""
    values = {}
    if path is not None:
        text = Path(path).read_text()
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            key, value = _parse_pair(stripped, f"{path}:{lineno}")
            values[key] = value
    for raw in overrides:
        key, value = _parse_pair(raw, "override")
        values[key] = value
    return RunConfig(**values)
