"""Actor-critic agent: softmax policy net plus scalar value net, updated every slot.

Per slot: act from the current observation window, sense, extend the window,
compute the TD error delta = r + gamma*V(next) - V(current) with the critic
as it stood at the start of the slot, then take a semi-gradient critic step
on delta^2 and a policy-gradient actor step on delta * log pi(action). The
two networks share no parameters.

The per-slot math exploits the window's sparsity: an N x M window has at
most M nonzero entries, so first-layer products touch only the active input
columns. Updates go through a column-lazy Adam (moments advance only where
a gradient lands, TF LazyAdam style) or plain SGD on the same pieces. Both
nets remain ordinary Mlp objects, so checkpointing, cloning, and the dense
reference engine in nets.py see every update.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericError
from .nets import (Gradients, LrSchedule, Mlp, IDENTITY, RELU, SOFTMAX,
                   init_mlp)
from .observation import ObservationWindow

SELECTION_MODES = ("sample", "argmax")
OPTIMIZERS = ("adam", "sgd")


@dataclass
class AcAgentConfig:
    n_channels: int
    window: int = 0                  # 0 means "same as n_channels"
    gamma: float = 0.4
    hidden_units: int = 200
    actor_lr: LrSchedule = field(default_factory=lambda: LrSchedule(0.0001))
    critic_lr: LrSchedule = field(default_factory=lambda: LrSchedule(0.0005))
    selection_mode: str = "sample"
    optimizer: str = "adam"
    init_seed: int = 0
    action_seed: int = 0

    def __post_init__(self):
        if self.n_channels < 2:
            raise ConfigError(f"need at least 2 channels, got {self.n_channels}")
        if self.window == 0:
            self.window = self.n_channels
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"gamma must lie strictly inside (0, 1), got {self.gamma}")
        if self.hidden_units < 1:
            raise ConfigError(f"hidden_units must be >= 1, got {self.hidden_units}")
        # the critic must track values faster than the policy moves
        if self.critic_lr.base_rate <= self.actor_lr.base_rate:
            raise ConfigError("critic base rate must exceed actor base rate")
        if self.selection_mode not in SELECTION_MODES:
            raise ConfigError(f"selection_mode must be one of {SELECTION_MODES}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer must be one of {OPTIMIZERS}")


def td_error(reward: float, v_next: float, v_current: float, gamma: float) -> float:
    """r + gamma * V(next window) - V(current window)."""
    return reward + gamma * v_next - v_current


def sample_index(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Draw a 0-based index from a probability vector via its CDF."""
    u = rng.random()
    idx = int(np.searchsorted(np.cumsum(probs), u))
    return min(idx, len(probs) - 1)


class _ColumnAdam:
    """Adam moments for one array; 2-D arrays may step on a column subset.

    Lazy semantics: a column's moments advance only when it receives a
    gradient, while the shared step counter (for bias correction) advances
    on every call.
    """

    def __init__(self, shape, beta1=0.9, beta2=0.999, eps=1e-8):
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.b1, self.b2, self.eps = beta1, beta2, eps
        self.t = 0

    def _corrections(self):
        self.t += 1
        return 1.0 - self.b1 ** self.t, 1.0 - self.b2 ** self.t

    def step_dense(self, p: np.ndarray, g: np.ndarray, rate: float, sign: float):
        b1c, b2c = self._corrections()
        self.m *= self.b1
        self.m += (1.0 - self.b1) * g
        self.v *= self.b2
        self.v += (1.0 - self.b2) * np.square(g)
        p += (sign * rate) * (self.m / b1c) / (np.sqrt(self.v / b2c) + self.eps)

    def step_columns(self, p: np.ndarray, g: np.ndarray, cols: np.ndarray,
                     rate: float, sign: float):
        if len(cols) == 0:
            return
        b1c, b2c = self._corrections()
        m = self.m[:, cols]
        m *= self.b1
        m += (1.0 - self.b1) * g
        self.m[:, cols] = m
        v = self.v[:, cols]
        v *= self.b2
        v += (1.0 - self.b2) * np.square(g)
        self.v[:, cols] = v
        block = p[:, cols]
        block += (sign * rate) * (m / b1c) / (np.sqrt(v / b2c) + self.eps)
        p[:, cols] = block


class _SgdSlot:
    """Plain SGD on the same piece interface as _ColumnAdam."""

    def step_dense(self, p, g, rate, sign):
        p += (sign * rate) * g

    def step_columns(self, p, g, cols, rate, sign):
        if len(cols) == 0:
            return
        block = p[:, cols]
        block += (sign * rate) * g
        p[:, cols] = block


def _active(flat: np.ndarray):
    idx = np.nonzero(flat)[0]
    return idx, flat[idx]


class AcAgent:

    def __init__(self, config: AcAgentConfig):
        self.config = config
        n, m, h = config.n_channels, config.window, config.hidden_units
        actor_seed, critic_seed = np.random.SeedSequence(config.init_seed).spawn(2)
        self.actor = init_mlp([n * m, h, n], [RELU, SOFTMAX], actor_seed)
        self.critic = init_mlp([n * m, h, 1], [RELU, IDENTITY], critic_seed)
        self.window = ObservationWindow(n, m)
        self.action_rng = np.random.default_rng(config.action_seed)
        self.step_counter = 0
        slot = _ColumnAdam if config.optimizer == "adam" else _SgdSlot
        self._opt = {name: (slot(shape) if config.optimizer == "adam" else slot())
                     for name, shape in (
                         ("aW1", (h, n * m)), ("ab1", (h,)),
                         ("aW2", (n, h)), ("ab2", (n,)),
                         ("cW1", (h, n * m)), ("cb1", (h,)),
                         ("cW2", (1, h)), ("cb2", (1,)))}
        # per-slot work buffers
        self._az1 = np.empty(h)
        self._ah = np.empty(h)
        self._probs = np.empty(n)
        self._cz1 = np.empty(h)
        self._ch = np.empty(h)
        self._czn = np.empty(h)
        self._chn = np.empty(h)
        self._dh = np.empty(h)
        self._gW2a = np.empty((n, h))

    @property
    def n_channels(self) -> int:
        return self.config.n_channels

    # ------------------------------------------------------------ forwards

    def _layer1(self, net: Mlp, idx, vals, z_out: np.ndarray) -> None:
        """z = W[:, idx] @ vals + b using only the active input columns."""
        layer = net.layers[0]
        if len(idx):
            np.dot(layer.weights[:, idx], vals, out=z_out)
            z_out += layer.biases
        else:
            z_out[:] = layer.biases

    def _actor_forward(self, idx, vals) -> np.ndarray:
        self._layer1(self.actor, idx, vals, self._az1)
        np.maximum(self._az1, 0.0, out=self._ah)
        out = self.actor.layers[1]
        np.dot(out.weights, self._ah, out=self._probs)
        self._probs += out.biases
        self._probs -= self._probs.max()
        np.exp(self._probs, out=self._probs)
        self._probs /= self._probs.sum()
        return self._probs

    def _critic_forward(self, idx, vals, z_buf, h_buf) -> float:
        self._layer1(self.critic, idx, vals, z_buf)
        np.maximum(z_buf, 0.0, out=h_buf)
        out = self.critic.layers[1]
        return float(out.weights[0] @ h_buf + out.biases[0])

    def policy(self, flat: np.ndarray) -> np.ndarray:
        """Action scores for a flattened window; always a valid distribution."""
        probs = self._actor_forward(*_active(np.asarray(flat, dtype=np.float64)))
        if not np.isfinite(probs).all():
            raise NumericError("actor produced non-finite scores")
        return probs.copy()

    def value(self, flat: np.ndarray) -> float:
        idx, vals = _active(np.asarray(flat, dtype=np.float64))
        return self._critic_forward(idx, vals, self._cz1, self._ch)

    # ------------------------------------------------------------ selection

    def pick(self, probs: np.ndarray, mode: str | None = None) -> int:
        """1-based channel from scores: sampled, or argmax with lowest-index ties."""
        mode = mode or self.config.selection_mode
        if mode == "argmax":
            return int(np.argmax(probs)) + 1
        return sample_index(probs, self.action_rng) + 1

    def select_action(self, mode: str | None = None) -> int:
        return self.pick(self.policy(self.window.flat()), mode)

    def observe(self, action: int, reward: int) -> None:
        self.window.push(action, reward)

    # -------------------------------------------------------------- updates

    def _actor_pieces(self, idx, vals, action: int, delta: float):
        """Gradient pieces of delta * log pi(action); forward buffers must be current."""
        sig = self._probs * (-delta)
        sig[action - 1] += delta
        out = self.actor.layers[1]
        np.dot(out.weights.T, sig, out=self._dh)
        self._dh[self._az1 <= 0.0] = 0.0
        np.multiply.outer(sig, self._ah, out=self._gW2a)
        g_w1 = np.multiply.outer(self._dh, vals) if len(idx) else None
        return g_w1, self._dh, self._gW2a, sig

    def _critic_pieces(self, idx, vals, delta: float, z_buf, h_buf):
        """Pieces of d(delta^2)/d theta with the target frozen, i.e. -2*delta*grad V."""
        c = -2.0 * delta
        out = self.critic.layers[1]
        dh = c * out.weights[0]
        dh[z_buf <= 0.0] = 0.0
        g_w2 = (c * h_buf)[None, :]
        g_b2 = np.array([c])
        g_w1 = np.multiply.outer(dh, vals) if len(idx) else None
        return g_w1, dh, g_w2, g_b2

    def _step_pieces(self, net: Mlp, names, pieces, idx, rate: float, sign: float):
        g_w1, g_b1, g_w2, g_b2 = pieces
        w1, b1 = net.layers[0].weights, net.layers[0].biases
        w2, b2 = net.layers[1].weights, net.layers[1].biases
        if g_w1 is not None:
            self._opt[names[0]].step_columns(w1, g_w1, idx, rate, sign)
        self._opt[names[1]].step_dense(b1, g_b1, rate, sign)
        self._opt[names[2]].step_dense(w2, g_w2, rate, sign)
        self._opt[names[3]].step_dense(b2, g_b2, rate, sign)

    def critic_update(self, flat: np.ndarray, delta: float, t: int) -> None:
        """Semi-gradient step down delta^2, the bootstrapped target held fixed."""
        idx, vals = _active(np.asarray(flat, dtype=np.float64))
        self._critic_forward(idx, vals, self._cz1, self._ch)
        pieces = self._critic_pieces(idx, vals, delta, self._cz1, self._ch)
        self._step_pieces(self.critic, ("cW1", "cb1", "cW2", "cb2"), pieces,
                          idx, self.config.critic_lr.rate_at(t), -1.0)

    def actor_update(self, flat: np.ndarray, action: int, delta: float, t: int) -> None:
        """Ascend delta * grad log pi(action); softmax head signal is onehot - probs."""
        idx, vals = _active(np.asarray(flat, dtype=np.float64))
        self._actor_forward(idx, vals)
        pieces = self._actor_pieces(idx, vals, action, delta)
        self._step_pieces(self.actor, ("aW1", "ab1", "aW2", "ab2"), pieces,
                          idx, self.config.actor_lr.rate_at(t), 1.0)

    # full-size gradient carriers for the finite-difference oracle tests

    def actor_gradients(self, flat: np.ndarray, action: int, delta: float) -> Gradients:
        """Dense gradients of delta * log pi(action | flat) w.r.t. actor parameters."""
        idx, vals = _active(np.asarray(flat, dtype=np.float64))
        self._actor_forward(idx, vals)
        g_w1b, g_b1, g_w2, g_b2 = self._actor_pieces(idx, vals, action, delta)
        g_w1 = np.zeros_like(self.actor.layers[0].weights)
        if g_w1b is not None:
            g_w1[:, idx] = g_w1b
        return Gradients([g_w1, g_w2.copy()], [g_b1.copy(), g_b2.copy()])

    def critic_gradients(self, flat: np.ndarray, delta: float) -> Gradients:
        """Dense semi-gradients of delta^2 w.r.t. critic parameters (target frozen)."""
        idx, vals = _active(np.asarray(flat, dtype=np.float64))
        self._critic_forward(idx, vals, self._cz1, self._ch)
        g_w1b, g_b1, g_w2, g_b2 = self._critic_pieces(idx, vals, delta,
                                                      self._cz1, self._ch)
        g_w1 = np.zeros_like(self.critic.layers[0].weights)
        if g_w1b is not None:
            g_w1[:, idx] = g_w1b
        return Gradients([g_w1, g_w2.copy()], [g_b1.copy(), g_b2.copy()])

    # ------------------------------------------------------------ main loop

    def train_step(self, env) -> tuple[int, float]:
        """One full slot; returns (reward, td error).

        Fixed ordering: act on the current window, sense the current channel
        state, push the observation, evaluate the critic on both windows
        before touching any parameters, then update critic, update actor,
        and finally advance the environment.
        """
        t = self.step_counter
        idx_t, vals_t = self.window.active()
        probs = self._actor_forward(idx_t, vals_t)
        if not np.isfinite(probs).all():
            raise NumericError(f"actor produced non-finite scores at slot {t}")
        action = self.pick(probs)
        reward = env.sense(action)
        self.window.push(action, reward)
        idx_n, vals_n = self.window.active()

        v_t = self._critic_forward(idx_t, vals_t, self._cz1, self._ch)
        v_n = self._critic_forward(idx_n, vals_n, self._czn, self._chn)
        delta = td_error(reward, v_n, v_t, self.config.gamma)
        if not np.isfinite(delta):
            raise NumericError(f"non-finite TD error at slot {t}")

        critic_pieces = self._critic_pieces(idx_t, vals_t, delta, self._cz1, self._ch)
        self._step_pieces(self.critic, ("cW1", "cb1", "cW2", "cb2"), critic_pieces,
                          idx_t, self.config.critic_lr.rate_at(t), -1.0)
        actor_pieces = self._actor_pieces(idx_t, vals_t, action, delta)
        self._step_pieces(self.actor, ("aW1", "ab1", "aW2", "ab2"), actor_pieces,
                          idx_t, self.config.actor_lr.rate_at(t), 1.0)

        env.step()
        self.step_counter += 1
        return reward, delta
