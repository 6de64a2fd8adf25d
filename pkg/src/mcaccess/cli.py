"""Command-line entry point: config resolution, dispatch, CSV and checkpoints.

Exit codes: 0 success, 2 configuration error, 3 runtime or numeric error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiments
from .checkpoint import save_agent
from .config import RunConfig, parse_config
from .env import PatternSpec
from .errors import ConfigError

_COLUMNS = {
    "round_robin_sweep": ["n_channels", "p", "seed", "avg_reward"],
    "arbitrary_orders": ["order_seed", "avg_reward"],
    "time_varying": ["window_index", "avg_reward", "changed"],
    "runtime": ["n_channels", "agent", "sec_per_decision", "percent_reduced",
                "sec_forward_only"],
}


def _last_cell_agent(cfg: RunConfig, log: list | None):
    """Retrain the last cell of a multi-cell scenario to get a saveable agent."""
    if cfg.scenario == "arbitrary_orders":
        pattern = PatternSpec(kind="arbitrary", n_channels=cfg.channels[0],
                              p=cfg.p[0], order_seed=cfg.order_seed + cfg.n_orders - 1)
        _, agent = experiments.run_training_cell(cfg, pattern, cfg.channels[0],
                                                 pattern.order_seed, log=log)
        return agent
    n, p = cfg.channels[-1], cfg.p[-1]
    pattern = experiments._pattern_spec(cfg, n, p, cfg.order_seed)
    _, agent = experiments.run_training_cell(cfg, pattern, n, round(p * 10_000),
                                             cfg.n_seeds - 1, log=log)
    return agent


def run(cfg: RunConfig, checkpoint: str | None = None) -> Path:
    """Execute one scenario; returns the CSV path it wrote."""
    out = Path(cfg.out) / f"{cfg.scenario}.csv"
    trains = cfg.agent in ("ac", "dqn") and cfg.scenario != "runtime"
    if cfg.train_log and not trains:
        raise ConfigError("train_log needs a training scenario with agent ac or dqn")
    log = [] if (cfg.train_log and trains) else None
    agent = None
    if cfg.scenario == "round_robin_sweep":
        rows = experiments.run_round_robin_sweep(cfg)
    elif cfg.scenario == "arbitrary_orders":
        rows = experiments.run_arbitrary_orders(cfg)
    elif cfg.scenario == "time_varying":
        rows, agent = experiments.run_time_varying(cfg, log=log)
    elif cfg.scenario == "runtime":
        rows = experiments.measure_runtime(cfg)
    else:
        raise ConfigError(f"unknown scenario {cfg.scenario!r}")
    experiments.write_csv(out, cfg, _COLUMNS[cfg.scenario], rows)
    # checkpoint and per-slot log both come from the single in-process agent;
    # multi-cell scenarios retrain their last cell once for that purpose
    if trains and (checkpoint or cfg.train_log):
        if agent is None:
            agent = _last_cell_agent(cfg, log)
        if checkpoint:
            save_agent(checkpoint, agent)
        if cfg.train_log:
            columns = (experiments.AC_LOG_COLUMNS if cfg.agent == "ac"
                       else experiments.DQN_LOG_COLUMNS)
            experiments.write_csv(Path(cfg.out) / cfg.train_log, cfg, columns, log)
    return out


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcaccess",
        description="Multichannel-access experiments: train sensing agents on "
                    "Markov-switching channels and emit CSV results.")
    parser.add_argument("--config", metavar="PATH", help="key=value config file")
    parser.add_argument("--scenario", metavar="NAME",
                        help="round_robin_sweep | arbitrary_orders | time_varying | runtime")
    parser.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                        dest="overrides", help="override a config key (repeatable)")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--checkpoint", metavar="PATH",
                        help="save the final trained agent here (multi-cell "
                             "scenarios retrain their last cell serially)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = list(args.overrides)
    if args.scenario:
        overrides.append(f"scenario={args.scenario}")
    if args.out:
        overrides.append(f"out={args.out}")
    try:
        cfg = parse_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"mcaccess: configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        out = run(cfg, args.checkpoint)
    except ConfigError as exc:
        print(f"mcaccess: configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"mcaccess: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {out}")
    return 0


def entry() -> None:
    sys.exit(main())
