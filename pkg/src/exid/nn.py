"""Minimal feed-forward network machinery shared by the teacher and critic.

Hand-rolled on numpy: SELU hidden layers, linear output head, optional
inverted dropout after each hidden activation, reverse-mode gradients and
Adam. Everything runs in float64; the networks are small enough that
precision matters more than speed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingError

# Self-normalizing network constants (Klambauer et al. values).
SELU_ALPHA = 1.6732632423543772
SELU_SCALE = 1.0507009873554805

DETERMINISTIC = "deterministic"
MC_DROPOUT = "mc_dropout"


def selu(z: np.ndarray) -> np.ndarray:
    return SELU_SCALE * np.where(z > 0.0, z, SELU_ALPHA * np.expm1(z))


def selu_grad(z: np.ndarray) -> np.ndarray:
    return SELU_SCALE * np.where(z > 0.0, 1.0, SELU_ALPHA * np.exp(z))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-subtraction for stability."""
    z = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits, axis=-1, keepdims=True)
    return z - np.log(np.sum(np.exp(z), axis=-1, keepdims=True))


def logsumexp(v: np.ndarray, axis: int = -1) -> np.ndarray:
    m = np.max(v, axis=axis, keepdims=True)
    return np.squeeze(m, axis=axis) + np.log(np.sum(np.exp(v - m), axis=axis))


@dataclass
class MlpParams:
    """Fully-connected net: sizes[0] -> ... -> sizes[-1], SELU hidden, linear head."""

    layer_sizes: tuple
    weights: list          # weights[i] has shape (sizes[i+1], sizes[i])
    biases: list           # biases[i] has shape (sizes[i+1],)
    dropout_rate: float = 0.0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or any(s <= 0 for s in sizes):
            raise ValueError(f"invalid layer sizes {sizes}")
        self.layer_sizes = sizes
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ValueError("weights/biases count must be len(layer_sizes) - 1")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[i + 1], sizes[i]) or b.shape != (sizes[i + 1],):
                raise ValueError(f"layer {i}: bad shapes {w.shape}, {b.shape}")
        if not (0.0 <= self.dropout_rate <= 1.0):
            raise ValueError(f"dropout_rate {self.dropout_rate} outside [0, 1]")

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def check_finite(self):
        for w, b in zip(self.weights, self.biases):
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise TrainingError("non-finite parameter values")


@dataclass
class ForwardCache:
    """Intermediate values of one forward pass, replayed by backward()."""

    x: np.ndarray                  # input, shape (n, sizes[0])
    pre_activations: list          # z per layer, shape (n, sizes[i+1])
    activations: list              # post-SELU, post-mask per hidden layer
    masks: list                    # inverted-dropout masks, None = all ones
    squeeze: bool                  # input was a single vector


@dataclass
class AdamState:
    m_w: list
    m_b: list
    v_w: list
    v_b: list
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: MlpParams) -> "AdamState":
        return cls(
            m_w=[np.zeros_like(w) for w in params.weights],
            m_b=[np.zeros_like(b) for b in params.biases],
            v_w=[np.zeros_like(w) for w in params.weights],
            v_b=[np.zeros_like(b) for b in params.biases],
        )


@dataclass
class Gradients:
    """Same shapes as the MlpParams they were taken against."""

    weights: list
    biases: list

    @classmethod
    def zeros_like(cls, params: MlpParams) -> "Gradients":
        return cls([np.zeros_like(w) for w in params.weights],
                   [np.zeros_like(b) for b in params.biases])

    def add_scaled(self, other: "Gradients", scale: float) -> None:
        for i in range(len(self.weights)):
            self.weights[i] += scale * other.weights[i]
            self.biases[i] += scale * other.biases[i]

    def global_norm(self) -> float:
        total = 0.0
        for w in self.weights:
            total += float(np.sum(w * w))
        for b in self.biases:
            total += float(np.sum(b * b))
        return float(np.sqrt(total))

    def clip_global_norm(self, max_norm: float) -> float:
        norm = self.global_norm()
        if norm > max_norm:
            scale = max_norm / norm
            for i in range(len(self.weights)):
                self.weights[i] *= scale
                self.biases[i] *= scale
        return norm

    def check_finite(self):
        for w in self.weights + self.biases:
            if not np.all(np.isfinite(w)):
                raise TrainingError("non-finite gradient")


def init_mlp(layer_sizes, dropout_rate: float = 0.0,
             rng: np.random.Generator | None = None) -> MlpParams:
    """LeCun-normal weights (std = 1/sqrt(fan_in), suits SELU), zero biases."""
    rng = rng if rng is not None else np.random.default_rng()
    sizes = tuple(int(s) for s in layer_sizes)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        std = 1.0 / np.sqrt(fan_in)
        weights.append(rng.normal(0.0, std, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpParams(sizes, weights, biases, dropout_rate)


def clone_params(params: MlpParams) -> MlpParams:
    return MlpParams(params.layer_sizes,
                     [w.copy() for w in params.weights],
                     [b.copy() for b in params.biases],
                     params.dropout_rate)


def params_equal(a: MlpParams, b: MlpParams) -> bool:
    if a.layer_sizes != b.layer_sizes:
        return False
    return all(np.array_equal(wa, wb) for wa, wb in zip(a.weights, b.weights)) and \
        all(np.array_equal(ba, bb) for ba, bb in zip(a.biases, b.biases))


def _as_batch(params: MlpParams, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.layer_sizes[0]:
        raise ValueError(
            f"input shape {x.shape} does not match input dim {params.layer_sizes[0]}")
    return x, squeeze


def forward(params: MlpParams, x, mode: str = DETERMINISTIC,
            rng: np.random.Generator | None = None) -> tuple[np.ndarray, ForwardCache]:
    """Run the net on a vector or a (n, d) batch.

    In mc_dropout mode a fresh inverted-dropout mask is drawn before every
    hidden layer; deterministic mode uses all-ones masks and is a pure
    function of (params, x).
    """
    if mode not in (DETERMINISTIC, MC_DROPOUT):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == MC_DROPOUT and rng is None:
        raise ValueError("mc_dropout mode needs a random generator")
    x, squeeze = _as_batch(params, x)
    p = params.dropout_rate
    drop = mode == MC_DROPOUT and p > 0.0

    a = x
    pre, acts, masks = [], [], []
    last = params.n_layers - 1
    for i in range(params.n_layers):
        z = a @ params.weights[i].T + params.biases[i]
        pre.append(z)
        if i == last:
            a = z
            break
        h = selu(z)
        if drop:
            if p >= 1.0:
                mask = np.zeros_like(h)
            else:
                mask = (rng.random(h.shape) >= p) / (1.0 - p)
            h = h * mask
            masks.append(mask)
        else:
            masks.append(None)
        acts.append(h)
        a = h

    out = a[0] if squeeze else a
    return out, ForwardCache(x, pre, acts, masks, squeeze)


def backward(params: MlpParams, cache: ForwardCache, output_grad) -> Gradients:
    """Gradients of a scalar loss w.r.t. all parameters, given dLoss/dOutput.

    Dropout masks recorded in the cache are replayed exactly. For batched
    caches the per-sample contributions are summed, so the caller controls
    mean-vs-sum via output_grad scaling.
    """
    if cache is None:
        raise ValueError("backward needs the cache from a matching forward call")
    g = np.asarray(output_grad, dtype=np.float64)
    if cache.squeeze:
        g = g[None, :]
    if g.shape != cache.pre_activations[-1].shape:
        raise ValueError(
            f"output_grad shape {g.shape} does not match forward output "
            f"{cache.pre_activations[-1].shape}")

    grads = Gradients.zeros_like(params)
    d = g
    for i in range(params.n_layers - 1, -1, -1):
        a_prev = cache.x if i == 0 else cache.activations[i - 1]
        grads.weights[i][...] = d.T @ a_prev
        grads.biases[i][...] = d.sum(axis=0)
        if i == 0:
            break
        da = d @ params.weights[i]
        if cache.masks[i - 1] is not None:
            da = da * cache.masks[i - 1]
        d = da * selu_grad(cache.pre_activations[i - 1])
    return grads


def adam_step(params: MlpParams, grads: Gradients, state: AdamState, lr: float) -> None:
    """One bias-corrected Adam update, in place."""
    grads.check_finite()
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for i in range(params.n_layers):
        for p, g, m, v in ((params.weights[i], grads.weights[i], state.m_w[i], state.v_w[i]),
                           (params.biases[i], grads.biases[i], state.m_b[i], state.v_b[i])):
            m *= state.beta1
            m += (1.0 - state.beta1) * g
            v *= state.beta2
            v += (1.0 - state.beta2) * (g * g)
            p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


def mc_stats(params: MlpParams, x, passes: int,
             rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Mean and population variance of the outputs over `passes` stochastic forwards."""
    if passes < 1:
        raise ValueError("mc_stats needs at least one pass")
    outs = []
    for _ in range(passes):
        y, _ = forward(params, x, MC_DROPOUT, rng)
        outs.append(y)
    stack = np.stack(outs)
    mean = stack.mean(axis=0)
    var = np.mean((stack - mean) ** 2, axis=0)
    return mean, var


CHECKPOINT_MAGIC = "mlp v1"


def save_params(params: MlpParams, path, header_lines=()) -> None:
    """Plain-text checkpoint: magic, extra header lines, sizes, dropout, arrays.

    Arrays are written row-major, one per line, with 17 significant digits so
    float64 values round-trip exactly.
    """
    with open(path, "w") as f:
        f.write(CHECKPOINT_MAGIC + "\n")
        for line in header_lines:
            f.write(line.rstrip("\n") + "\n")
        f.write("layers " + " ".join(str(s) for s in params.layer_sizes) + "\n")
        f.write("dropout %.17g\n" % params.dropout_rate)
        for i in range(params.n_layers):
            f.write("W%d " % i + " ".join("%.17g" % v for v in params.weights[i].ravel()) + "\n")
            f.write("b%d " % i + " ".join("%.17g" % v for v in params.biases[i]) + "\n")


def load_params(path) -> tuple[MlpParams, dict]:
    """Inverse of save_params. Returns the params and any extra header fields."""
    with open(path) as f:
        lines = [ln.rstrip("\n") for ln in f]
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a {CHECKPOINT_MAGIC!r} checkpoint")
    header = {}
    i = 1
    while i < len(lines) and not lines[i].startswith("layers "):
        key, _, value = lines[i].partition(" ")
        header[key] = value
        i += 1
    if i == len(lines):
        raise ValueError(f"{path}: missing layers line")
    sizes = tuple(int(tok) for tok in lines[i].split()[1:])
    i += 1
    if not lines[i].startswith("dropout "):
        raise ValueError(f"{path}: missing dropout line")
    dropout = float(lines[i].split()[1])
    i += 1
    weights, biases = [], []
    for li in range(len(sizes) - 1):
        wtok = lines[i].split()
        btok = lines[i + 1].split()
        if wtok[0] != f"W{li}" or btok[0] != f"b{li}":
            raise ValueError(f"{path}: expected W{li}/b{li} lines")
        w = np.array([float(t) for t in wtok[1:]]).reshape(sizes[li + 1], sizes[li])
        b = np.array([float(t) for t in btok[1:]])
        weights.append(w)
        biases.append(b)
        i += 2
    return MlpParams(sizes, weights, biases, dropout), header
