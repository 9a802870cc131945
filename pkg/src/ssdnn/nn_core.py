"""Fully-connected ReLU regression networks trained by mini-batch Adam.

Everything is float64.  Parameters of one network live in a flat vector laid
out layer by layer (weight matrix row-major, then bias).  The trainer works
on a stack of ``k`` such vectors at once, shape ``(k, P)``, so an ensemble of
equally sized blocks is trained with one numpy call per layer per step.  Each
stack slice sees exactly the arithmetic it would see alone, which keeps the
result independent of how members are grouped.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError, TrainingDiverged


@dataclass(frozen=True)
class NetworkSpec:
    input_dim: int
    hidden_widths: tuple[int, ...]
    output_dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("input_dim and output_dim must be >= 1")
        if len(self.hidden_widths) < 1:
            raise ValueError("need at least one hidden layer")
        if min(self.hidden_widths) < 1:
            raise ValueError(f"hidden widths must be >= 1, got {self.hidden_widths}")

    @property
    def depth(self) -> int:
        return len(self.hidden_widths)

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_widths, self.output_dim)


def param_count(spec: NetworkSpec) -> int:
    """Number of weights plus biases: sum over layers of H_i*H_{i+1} + H_{i+1}."""
    s = spec.layer_sizes
    return sum(s[i] * s[i + 1] + s[i + 1] for i in range(len(s) - 1))


def auto_spec(input_dim: int, depth: int, budget: int, output_dim: int = 1) -> NetworkSpec:
    """Constant-width network of the given depth with the largest width whose
    parameter count does not exceed ``budget`` (width 1 if none fits)."""
    width = 1
    while param_count(NetworkSpec(input_dim, (width + 1,) * depth, output_dim)) <= budget:
        width += 1
    return NetworkSpec(input_dim, (width,) * depth, output_dim)


def _layout(spec):
    """(weight_slice, weight_shape, bias_slice) per layer in the flat vector."""
    s = spec.layer_sizes
    out, pos = [], 0
    for fan_in, fan_out in zip(s[:-1], s[1:]):
        w = slice(pos, pos + fan_in * fan_out)
        pos = w.stop
        b = slice(pos, pos + fan_out)
        pos = b.stop
        out.append((w, (fan_out, fan_in), b))
    return out


def _views(spec, flat):
    """Per-layer views into a ``(k, P)`` buffer: W as (k, out, in), b as (k, out)."""
    k = flat.shape[0]
    Ws, bs = [], []
    for w, shape, b in _layout(spec):
        Ws.append(flat[:, w].reshape(k, *shape))
        bs.append(flat[:, b])
    return Ws, bs


@dataclass
class NetworkParams:
    """Weights ``W_l`` of shape (H_{l+1}, H_l) and biases ``b_l`` of length H_{l+1}."""

    spec: NetworkSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def flat(self) -> np.ndarray:
        parts = []
        for W, b in zip(self.weights, self.biases):
            parts.append(np.asarray(W, dtype=np.float64).ravel())
            parts.append(np.asarray(b, dtype=np.float64).ravel())
        return np.concatenate(parts)

    @classmethod
    def from_flat(cls, spec: NetworkSpec, vec) -> "NetworkParams":
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (param_count(spec),):
            raise DataError(f"expected {param_count(spec)} parameters, got shape {vec.shape}")
        Ws, bs = _views(spec, vec.copy()[None, :])
        return cls(spec, [W[0] for W in Ws], [b[0] for b in bs])

    @property
    def size(self) -> int:
        return sum(W.size + b.size for W, b in zip(self.weights, self.biases))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 10
    learning_rate: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if self.learning_rate <= 0 or self.adam_epsilon <= 0:
            raise ValueError("learning_rate and adam_epsilon must be positive")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")


@dataclass
class AdamState:
    first_moment: NetworkParams
    second_moment: NetworkParams
    step_count: int = 0

    @classmethod
    def zeros(cls, spec: NetworkSpec) -> "AdamState":
        z = np.zeros(param_count(spec))
        return cls(NetworkParams.from_flat(spec, z), NetworkParams.from_flat(spec, z))


def _init_flat(spec, rng):
    parts = []
    for fan_in, fan_out in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        parts.append(rng.uniform(-bound, bound, size=fan_in * fan_out))
        parts.append(np.zeros(fan_out))
    return np.concatenate(parts)


def init_params(spec: NetworkSpec, seed: int) -> NetworkParams:
    """Weights ~ U[-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases."""
    return NetworkParams.from_flat(spec, _init_flat(spec, np.random.default_rng(seed)))


def _check_x(spec, X):
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != spec.input_dim or X.ndim not in (1, 2):
        raise DataError(f"input has shape {X.shape}; expected (..., {spec.input_dim})")
    return X


def forward(params: NetworkParams, x) -> np.ndarray:
    """Evaluate the network at one input (shape ``(d,)``) or a batch ``(m, d)``."""
    X = _check_x(params.spec, x)
    h = X
    last = len(params.weights) - 1
    for l, (W, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ W.T + b
        if l < last:
            h = np.maximum(h, 0.0)
    return h


# --- stacked kernels ---------------------------------------------------------

def _forward_stack(Ws, bs, X):
    """X: (k, m, d).  Returns the list of layer outputs, input first."""
    acts = [X]
    h = X
    last = len(Ws) - 1
    for l, (W, b) in enumerate(zip(Ws, bs)):
        z = np.matmul(h, W.transpose(0, 2, 1))
        z += b[:, None, :]
        if l < last:
            np.maximum(z, 0.0, out=z)
        acts.append(z)
        h = z
    return acts


def _backward_stack(Ws, bs, X, Y, gWs, gbs):
    """Write the gradient of the batch-mean loss (f(x) - y)^2 / 2 into the
    gradient views.  ReLU'(0) is taken as 0."""
    acts = _forward_stack(Ws, bs, X)
    delta = (acts[-1] - Y) / X.shape[1]
    for l in range(len(Ws) - 1, -1, -1):
        np.matmul(delta.transpose(0, 2, 1), acts[l], out=gWs[l])
        np.sum(delta, axis=1, out=gbs[l])
        if l > 0:
            delta = np.matmul(delta, Ws[l])
            delta *= acts[l] > 0


def _adam_update(p, m, v, g, t, cfg):
    """In-place Adam step ``t`` (1-based) with bias-corrected moments."""
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    m *= b1
    m += (1.0 - b1) * g
    v *= b2
    v += (1.0 - b2) * (g * g)
    m_hat = m / (1.0 - b1 ** t)
    v_hat = v / (1.0 - b2 ** t)
    p -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_epsilon)


def _as_targets(y, m):
    Y = np.asarray(y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[0] != m:
        raise DataError(f"{m} inputs but {Y.shape[0]} targets")
    return Y


def mse_loss(params: NetworkParams, X, y) -> float:
    """Mean over the batch of (f(x) - y)^2 / 2."""
    X = _check_x(params.spec, X)
    X = np.atleast_2d(X)
    if X.shape[0] == 0:
        raise DataError("empty batch")
    Y = _as_targets(y, X.shape[0])
    r = forward(params, X) - Y
    return float(0.5 * np.mean(np.sum(r * r, axis=1)))


def backward(params: NetworkParams, X, y) -> NetworkParams:
    """Exact gradient of :func:`mse_loss`, returned in the parameter layout."""
    spec = params.spec
    X = np.atleast_2d(_check_x(spec, X))
    if X.shape[0] == 0:
        raise DataError("empty batch")
    Y = _as_targets(y, X.shape[0])
    flat = params.flat()[None, :]
    grad = np.zeros_like(flat)
    Ws, bs = _views(spec, flat)
    gWs, gbs = _views(spec, grad)
    _backward_stack(Ws, bs, X[None], Y[None], gWs, gbs)
    return NetworkParams.from_flat(spec, grad[0])


def adam_step(params: NetworkParams, state: AdamState, grad: NetworkParams,
              cfg: TrainConfig) -> tuple[NetworkParams, AdamState]:
    spec = params.spec
    p = params.flat()
    m = state.first_moment.flat()
    v = state.second_moment.flat()
    t = state.step_count + 1
    _adam_update(p, m, v, grad.flat(), t, cfg)
    return (NetworkParams.from_flat(spec, p),
            AdamState(NetworkParams.from_flat(spec, m), NetworkParams.from_flat(spec, v), t))


# --- training ----------------------------------------------------------------

def _train_chunk(spec, X, Y, cfg, seeds):
    """Train ``len(seeds)`` networks on the matching slices of X (k, m, d)."""
    k, m, _ = X.shape
    rngs = [np.random.default_rng(s) for s in seeds]
    flat = np.stack([_init_flat(spec, r) for r in rngs])
    grad = np.zeros_like(flat)
    mom1 = np.zeros_like(flat)
    mom2 = np.zeros_like(flat)
    Ws, bs = _views(spec, flat)
    gWs, gbs = _views(spec, grad)
    rows = np.arange(k)[:, None]
    bsz = cfg.batch_size
    t = 0
    for epoch in range(cfg.epochs):
        perm = np.stack([r.permutation(m) for r in rngs])
        # overflow shows up as non-finite parameters, reported below
        with np.errstate(over="ignore", invalid="ignore"):
            for start in range(0, m, bsz):
                idx = perm[:, start:start + bsz]
                _backward_stack(Ws, bs, X[rows, idx], Y[rows, idx], gWs, gbs)
                t += 1
                _adam_update(flat, mom1, mom2, grad, t, cfg)
        if not np.isfinite(flat).all():
            bad = sorted({int(i) for i in np.nonzero(~np.isfinite(flat).all(axis=1))[0]})
            raise TrainingDiverged(
                f"non-finite parameters after epoch {epoch + 1} (step {t}) in stack "
                f"members {bad}; lower the learning rate or rescale the data"
            )
    return flat


def train_stack(spec: NetworkSpec, X, y, cfg: TrainConfig, seeds: Sequence[int],
                jobs: int = 1) -> tuple[list[NetworkParams], float]:
    """Train one network per leading slice of ``X`` (k, m, d) / ``y`` (k, m).

    Member ``i`` is initialised and shuffled from ``seeds[i]`` alone.  With
    ``jobs > 1`` the stack is split across threads; the result does not
    depend on the split.  Returns the trained params and elapsed seconds.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3 or X.shape[2] != spec.input_dim:
        raise DataError(f"stacked inputs have shape {X.shape}; expected (k, m, {spec.input_dim})")
    k, m, _ = X.shape
    Y = np.asarray(y, dtype=np.float64)
    if Y.ndim == 2:
        Y = Y[:, :, None]
    if Y.shape[:2] != (k, m) or Y.shape[2] != spec.output_dim:
        raise DataError(f"targets have shape {Y.shape}; expected ({k}, {m})")
    if m == 0:
        raise DataError("cannot train on an empty block")
    if len(seeds) != k:
        raise ValueError(f"{len(seeds)} seeds for {k} stacked blocks")
    t0 = time.perf_counter()
    jobs = max(1, min(int(jobs), k))
    if jobs == 1:
        flat = _train_chunk(spec, X, Y, cfg, list(seeds))
    else:
        bounds = np.linspace(0, k, jobs + 1).astype(int)
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(lambda ab: _train_chunk(spec, X[ab[0]:ab[1]], Y[ab[0]:ab[1]], cfg,
                                                     list(seeds[ab[0]:ab[1]])),
                             zip(bounds[:-1], bounds[1:]))
            flat = np.concatenate(list(parts))
    elapsed = time.perf_counter() - t0
    return [NetworkParams.from_flat(spec, row) for row in flat], elapsed


def train(spec: NetworkSpec, X, y, cfg: TrainConfig) -> NetworkParams:
    """Empirical risk minimisation of the squared loss by mini-batch Adam.

    Each epoch reshuffles with the seeded generator and walks the data in
    batches of ``cfg.batch_size``; the final short batch is kept.
    """
    X = np.atleast_2d(_check_x(spec, X))
    Y = _as_targets(y, X.shape[0])
    models, _ = train_stack(spec, X[None], Y[None], cfg, [cfg.seed])
    return models[0]
