"""Binary checkpoint container for networks and whole agents.

A network section is self-describing: version tag, layer count, per-layer
dimensions and activation tag, then row-major float64 little-endian
weights and biases. An agent file wraps a JSON header (agent kind, config,
step counter, observation window contents) followed by the agent's
networks. Saving is deterministic, so save -> load -> save is
byte-identical. Replay buffers and optimizer moments are not persisted:
a loaded agent resumes with the saved parameters, window, and slot count.
"""

from __future__ import annotations

import io
import json
import struct

import numpy as np

from .actor_critic import AcAgent, AcAgentConfig
from .dqn import DqnAgent, DqnConfig
from .errors import CheckpointError
from .nets import DenseLayer, LrSchedule, Mlp, ACTIVATIONS

NET_MAGIC = b"MCNT"
AGENT_MAGIC = b"MCAG"
VERSION = 1

_ACT_TAGS = {name: i for i, name in enumerate(ACTIVATIONS)}
_TAG_ACTS = {i: name for name, i in _ACT_TAGS.items()}
_AGENT_KINDS = {"ac": 1, "dqn": 2}
_KIND_AGENTS = {v: k for k, v in _AGENT_KINDS.items()}


def _read_exact(stream, n: int) -> bytes:
    data = stream.read(n)
    if len(data) != n:
        raise CheckpointError(f"truncated checkpoint: wanted {n} bytes, got {len(data)}")
    return data


def _read_u32(stream) -> int:
    return struct.unpack("<I", _read_exact(stream, 4))[0]


def write_mlp(stream, mlp: Mlp) -> None:
    stream.write(NET_MAGIC)
    stream.write(struct.pack("<I", VERSION))
    stream.write(struct.pack("<I", len(mlp.layers)))
    for layer in mlp.layers:
        stream.write(struct.pack("<IIB", layer.in_dim, layer.out_dim,
                                 _ACT_TAGS[layer.activation]))
    for layer in mlp.layers:
        stream.write(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
        stream.write(np.ascontiguousarray(layer.biases, dtype="<f8").tobytes())


def read_mlp(stream) -> Mlp:
    if _read_exact(stream, 4) != NET_MAGIC:
        raise CheckpointError("not a network section")
    version = _read_u32(stream)
    if version != VERSION:
        raise CheckpointError(f"unsupported network version {version}")
    n_layers = _read_u32(stream)
    if not 1 <= n_layers <= 1024:
        raise CheckpointError(f"implausible layer count {n_layers}")
    shapes = []
    for _ in range(n_layers):
        in_dim, out_dim, tag = struct.unpack("<IIB", _read_exact(stream, 9))
        if tag not in _TAG_ACTS:
            raise CheckpointError(f"unknown activation tag {tag}")
        shapes.append((in_dim, out_dim, _TAG_ACTS[tag]))
    layers = []
    for in_dim, out_dim, act in shapes:
        w = np.frombuffer(_read_exact(stream, 8 * in_dim * out_dim), "<f8")
        b = np.frombuffer(_read_exact(stream, 8 * out_dim), "<f8")
        layers.append(DenseLayer(w.reshape(out_dim, in_dim).copy(), b.copy(), act))
    return Mlp(layers)


def _schedule_to_dict(s: LrSchedule) -> dict:
    return {"base_rate": s.base_rate, "decay_factor": s.decay_factor,
            "decay_interval": s.decay_interval}


def _schedule_from_dict(d: dict) -> LrSchedule:
    return LrSchedule(d["base_rate"], d["decay_factor"], d["decay_interval"])


def _agent_header(agent) -> dict:
    if isinstance(agent, AcAgent):
        c = agent.config
        config = {
            "n_channels": c.n_channels, "window": c.window, "gamma": c.gamma,
            "hidden_units": c.hidden_units, "actor_lr": _schedule_to_dict(c.actor_lr),
            "critic_lr": _schedule_to_dict(c.critic_lr),
            "selection_mode": c.selection_mode, "optimizer": c.optimizer,
            "init_seed": c.init_seed, "action_seed": c.action_seed,
        }
        kind = "ac"
    elif isinstance(agent, DqnAgent):
        c = agent.config
        config = {
            "n_channels": c.n_channels, "window": c.window, "gamma": c.gamma,
            "hidden_units": list(c.hidden_units), "minibatch": c.minibatch,
            "lr": _schedule_to_dict(c.lr), "epsilon_start": c.epsilon_start,
            "epsilon_end": c.epsilon_end, "epsilon_decay_slots": c.epsilon_decay_slots,
            "target_sync_period": c.target_sync_period, "warmup": c.warmup,
            "capacity": c.capacity, "optimizer": c.optimizer,
            "init_seed": c.init_seed, "action_seed": c.action_seed,
        }
        kind = "dqn"
    else:
        raise CheckpointError(f"cannot checkpoint object of type {type(agent).__name__}")
    return {
        "kind": kind,
        "config": config,
        "step_counter": agent.step_counter,
        "window_channels": agent.window.channels.tolist(),
        "window_signs": agent.window.signs.tolist(),
    }


def save_agent(path, agent) -> None:
    header = _agent_header(agent)
    nets = ([agent.actor, agent.critic] if header["kind"] == "ac"
            else [agent.qnet, agent.target])
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as f:
        f.write(AGENT_MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<B", _AGENT_KINDS[header["kind"]]))
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(struct.pack("<I", len(nets)))
        for net in nets:
            write_mlp(f, net)


def _restore_window(agent, header: dict) -> None:
    for chan, sign in zip(reversed(header["window_channels"]),
                          reversed(header["window_signs"])):
        if chan:
            agent.window.push(int(chan), int(sign))


def load_agent(path):
    with open(path, "rb") as f:
        stream = io.BytesIO(f.read())
    if _read_exact(stream, 4) != AGENT_MAGIC:
        raise CheckpointError("not an agent checkpoint")
    version = _read_u32(stream)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    kind_tag = struct.unpack("<B", _read_exact(stream, 1))[0]
    if kind_tag not in _KIND_AGENTS:
        raise CheckpointError(f"unknown agent kind tag {kind_tag}")
    header = json.loads(_read_exact(stream, _read_u32(stream)).decode())
    if header.get("kind") != _KIND_AGENTS[kind_tag]:
        raise CheckpointError("header kind does not match file tag")
    n_nets = _read_u32(stream)
    nets = [read_mlp(stream) for _ in range(n_nets)]
    cfg = header["config"]
    if header["kind"] == "ac":
        if n_nets != 2:
            raise CheckpointError(f"actor-critic checkpoint needs 2 nets, found {n_nets}")
        config = AcAgentConfig(
            n_channels=cfg["n_channels"], window=cfg["window"], gamma=cfg["gamma"],
            hidden_units=cfg["hidden_units"],
            actor_lr=_schedule_from_dict(cfg["actor_lr"]),
            critic_lr=_schedule_from_dict(cfg["critic_lr"]),
            selection_mode=cfg["selection_mode"], optimizer=cfg["optimizer"],
            init_seed=cfg["init_seed"], action_seed=cfg["action_seed"])
        agent = AcAgent(config)
        agent.actor.copy_from(nets[0])
        agent.critic.copy_from(nets[1])
    else:
        if n_nets != 2:
            raise CheckpointError(f"DQN checkpoint needs 2 nets, found {n_nets}")
        config = DqnConfig(
            n_channels=cfg["n_channels"], window=cfg["window"], gamma=cfg["gamma"],
            hidden_units=tuple(cfg["hidden_units"]), minibatch=cfg["minibatch"],
            lr=_schedule_from_dict(cfg["lr"]), epsilon_start=cfg["epsilon_start"],
            epsilon_end=cfg["epsilon_end"],
            epsilon_decay_slots=cfg["epsilon_decay_slots"],
            target_sync_period=cfg["target_sync_period"], warmup=cfg["warmup"],
            capacity=cfg["capacity"], optimizer=cfg["optimizer"],
            init_seed=cfg["init_seed"], action_seed=cfg["action_seed"])
        agent = DqnAgent(config)
        agent.qnet.copy_from(nets[0])
        agent.target.copy_from(nets[1])
    agent.step_counter = int(header["step_counter"])
    _restore_window(agent, header)
    return agent
