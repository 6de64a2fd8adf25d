"""Small dense feedforward engine with hand-written backpropagation.

Everything is float64 numpy. A network is a list of DenseLayer objects;
forward() returns the output plus a cache of per-layer inputs and
pre-activations, backward() turns an output-side error signal into exact
parameter gradients, and apply() is the plain SGD update. AdamUpdater
provides the adaptive step the agents train with. Inputs may be single
vectors or (batch, features) matrices; batched backward sums gradients
over the batch.

Error-signal convention for backward(): when the final layer is softmax
the signal is taken to be the gradient with respect to the final
pre-activations (the usual fused softmax head, e.g. onehot - probs for a
log-likelihood objective); for identity and relu heads it is the gradient
with respect to the outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericError, ShapeError

IDENTITY = "identity"
RELU = "relu"
SOFTMAX = "softmax"
ACTIVATIONS = (IDENTITY, RELU, SOFTMAX)


@dataclass
class DenseLayer:
    weights: np.ndarray   # (out, in)
    biases: np.ndarray    # (out,)
    activation: str

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        if self.weights.ndim != 2 or self.biases.shape != (self.weights.shape[0],):
            raise ShapeError("weights must be (out, in) with matching (out,) biases")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]


class Mlp:
    """Ordered dense layers; softmax allowed only as the final activation."""

    def __init__(self, layers: list[DenseLayer]):
        if not layers:
            raise ShapeError("need at least one layer")
        for a, b in zip(layers, layers[1:]):
            if a.out_dim != b.in_dim:
                raise ShapeError(f"layer out {a.out_dim} != next in {b.in_dim}")
        if any(l.activation == SOFTMAX for l in layers[:-1]):
            raise ConfigError("softmax is only supported at the output layer")
        self.layers = layers

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def clone(self) -> "Mlp":
        return Mlp([DenseLayer(l.weights.copy(), l.biases.copy(), l.activation)
                    for l in self.layers])

    def copy_from(self, other: "Mlp") -> None:
        for mine, theirs in zip(self.layers, other.layers):
            if mine.weights.shape != theirs.weights.shape:
                raise ShapeError("cannot copy between differently shaped networks")
            mine.weights[...] = theirs.weights
            mine.biases[...] = theirs.biases

    def parameters(self):
        for layer in self.layers:
            yield layer.weights
            yield layer.biases

    def all_finite(self) -> bool:
        return all(np.isfinite(p).all() for p in self.parameters())

    def forward(self, x: np.ndarray):
        """Run the net; returns (output, cache) and leaves parameters untouched."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.in_dim:
            raise ShapeError(f"input width {x.shape[-1]} != expected {self.in_dim}")
        if x.ndim > 2:
            raise ShapeError("input must be a vector or a (batch, features) matrix")
        inputs, preacts = [], []
        for layer in self.layers:
            inputs.append(x)
            z = x @ layer.weights.T + layer.biases
            preacts.append(z)
            if layer.activation == RELU:
                x = np.maximum(z, 0.0)
            elif layer.activation == SOFTMAX:
                x = softmax(z)
            else:
                x = z
        return x, ForwardCache(inputs, preacts)

    def backward(self, cache: "ForwardCache", output_gradient: np.ndarray) -> "Gradients":
        """Exact gradients of the scalar objective whose output-side gradient is given."""
        delta = np.asarray(output_gradient, dtype=np.float64)
        if len(cache.inputs) != len(self.layers):
            raise ShapeError("cache does not match this network")
        if delta.shape != cache.preacts[-1].shape:
            raise ShapeError(f"output gradient shape {delta.shape} != "
                             f"output shape {cache.preacts[-1].shape}")
        d_w = [None] * len(self.layers)
        d_b = [None] * len(self.layers)
        for k in reversed(range(len(self.layers))):
            layer = self.layers[k]
            # softmax heads receive the signal already in pre-activation space
            if layer.activation == RELU:
                delta = delta * (cache.preacts[k] > 0)
            x_in = cache.inputs[k]
            if delta.ndim == 1:
                d_w[k] = np.outer(delta, x_in)
                d_b[k] = delta.copy()
            else:
                d_w[k] = delta.T @ x_in
                d_b[k] = delta.sum(axis=0)
            if k > 0:
                delta = delta @ layer.weights
        return Gradients(d_w, d_b)


@dataclass
class ForwardCache:
    inputs: list
    preacts: list


@dataclass
class Gradients:
    """Per-layer weight and bias gradients, shaped like their Mlp."""

    d_weights: list = field(default_factory=list)
    d_biases: list = field(default_factory=list)

    @classmethod
    def zeros_like(cls, mlp: Mlp) -> "Gradients":
        return cls([np.zeros_like(l.weights) for l in mlp.layers],
                   [np.zeros_like(l.biases) for l in mlp.layers])

    def arrays(self):
        for dw, db in zip(self.d_weights, self.d_biases):
            yield dw
            yield db

    def all_finite(self) -> bool:
        return all(np.isfinite(g).all() for g in self.arrays())


def softmax(z: np.ndarray) -> np.ndarray:
    """Probabilities from scores; max is subtracted first so any finite input is safe."""
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def apply(mlp: Mlp, grads: Gradients, rate: float, direction: str = "descent") -> Mlp:
    """One plain SGD step, in place: theta -+= rate * gradient."""
    if direction not in ("descent", "ascent"):
        raise ConfigError(f"direction must be descent or ascent, got {direction!r}")
    if rate <= 0:
        raise ConfigError(f"rate must be positive, got {rate}")
    if not grads.all_finite():
        raise NumericError("non-finite gradient entries; aborting update")
    sign = -rate if direction == "descent" else rate
    for layer, dw, db in zip(mlp.layers, grads.d_weights, grads.d_biases):
        if layer.weights.shape != dw.shape or layer.biases.shape != db.shape:
            raise ShapeError("gradient shapes do not match the network")
        layer.weights += sign * dw
        layer.biases += sign * db
    return mlp


class AdamUpdater:
    """Adam moment estimates for one Mlp; steps are taken at a caller-supplied rate.

    Single-observation gradients here are tiny and noisy, so plain SGD at
    practical rates barely moves the networks; Adam's per-parameter
    normalization is what makes small rates effective. Scratch buffers are
    preallocated because this sits in the per-slot training path.
    """

    def __init__(self, mlp: Mlp, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in mlp.parameters()]
        self.v = [np.zeros_like(p) for p in mlp.parameters()]
        self._scratch = [np.empty_like(p) for p in mlp.parameters()]

    def step(self, mlp: Mlp, grads: Gradients, rate: float,
             direction: str = "ascent") -> None:
        if direction not in ("descent", "ascent"):
            raise ConfigError(f"direction must be descent or ascent, got {direction!r}")
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        scale = rate / b1c if direction == "ascent" else -rate / b1c
        for p, g, m, v, s in zip(mlp.parameters(), grads.arrays(),
                                 self.m, self.v, self._scratch):
            m *= self.beta1
            np.multiply(g, 1.0 - self.beta1, out=s)
            m += s
            v *= self.beta2
            np.multiply(g, g, out=s)
            s *= 1.0 - self.beta2
            v += s
            np.divide(v, b2c, out=s)
            np.sqrt(s, out=s)
            s += self.eps
            np.divide(m, s, out=s)
            s *= scale
            p += s


@dataclass
class LrSchedule:
    """Exponentially decaying step size: base * factor^floor(t / interval)."""

    base_rate: float
    decay_factor: float = 0.95
    decay_interval: int = 5000

    def __post_init__(self):
        if self.base_rate <= 0:
            raise ConfigError(f"base_rate must be > 0, got {self.base_rate}")
        if not 0 < self.decay_factor <= 1:
            raise ConfigError(f"decay_factor must be in (0, 1], got {self.decay_factor}")
        if self.decay_interval <= 0:
            raise ConfigError(f"decay_interval must be > 0, got {self.decay_interval}")

    def rate_at(self, t: int) -> float:
        if t < 0:
            raise ConfigError(f"slot index must be >= 0, got {t}")
        return self.base_rate * self.decay_factor ** (t // self.decay_interval)


def glorot_bound(in_dim: int, out_dim: int) -> float:
    return float(np.sqrt(6.0 / (in_dim + out_dim)))


def init_mlp(dims: list[int], activations: list[str], init_seed: int) -> Mlp:
    """Seeded scaled-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases."""
    if len(dims) < 2 or len(activations) != len(dims) - 1:
        raise ShapeError("need dims [in, h1, ..., out] and one activation per layer")
    rng = np.random.default_rng(init_seed)
    layers = []
    for in_dim, out_dim, act in zip(dims, dims[1:], activations):
        bound = glorot_bound(in_dim, out_dim)
        w = rng.uniform(-bound, bound, size=(out_dim, in_dim))
        layers.append(DenseLayer(w, np.zeros(out_dim), act))
    return Mlp(layers)


def finite_difference_gradients(mlp: Mlp, loss_fn, step: float = 1e-5) -> Gradients:
    """Central-difference gradients of loss_fn(mlp) over every parameter.

    Slow by design; this is the independent oracle the analytic path is
    checked against. loss_fn must not mutate the network.
    """
    grads = Gradients.zeros_like(mlp)
    for param, out in zip(mlp.parameters(), grads.arrays()):
        flat_p = param.reshape(-1)
        flat_g = out.reshape(-1)
        for i in range(flat_p.size):
            saved = flat_p[i]
            flat_p[i] = saved + step
            hi = loss_fn(mlp)
            flat_p[i] = saved - step
            lo = loss_fn(mlp)
            flat_p[i] = saved
            flat_g[i] = (hi - lo) / (2.0 * step)
    return grads


def gradient_relative_error(analytic: Gradients, numeric: Gradients) -> float:
    """max over parameters of |a - f| / max(1e-8, |a| + |f|)."""
    worst = 0.0
    for a, f in zip(analytic.arrays(), numeric.arrays()):
        denom = np.maximum(1e-8, np.abs(a) + np.abs(f))
        worst = max(worst, float((np.abs(a - f) / denom).max()))
    return worst
