"""Small tanh MLPs with hand-written backprop and an AdamW optimizer.

Everything is float64 numpy. Networks map a batch of feature rows to one
scalar per row; hidden layers use tanh and the output layer is linear.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .model import ConfigError

DEFAULT_DIMS = (11, 32, 16, 1)
CKPT_MAGIC = "freyr-ckpt v1"


class CheckpointFormatError(ConfigError):
    pass


def parameter_count(dims: Sequence[int]) -> int:
    return sum(a * b + b for a, b in zip(dims[:-1], dims[1:]))


class Mlp:
    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray]):
        if len(weights) != len(biases) or not weights:
            raise ValueError("need one bias per weight matrix")
        dims = [weights[0].shape[0]]
        for W, b in zip(weights, biases):
            if W.ndim != 2 or W.shape[0] != dims[-1] or b.shape != (W.shape[1],):
                raise ValueError("inconsistent layer shapes")
            dims.append(W.shape[1])
        if dims[-1] != 1:
            raise ValueError("output layer must have width 1")
        self.weights = [np.asarray(W, dtype=np.float64) for W in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        self.dims = tuple(dims)

    @classmethod
    def init(cls, dims: Sequence[int] = DEFAULT_DIMS, seed: int = 0) -> "Mlp":
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases."""
        dims = tuple(int(d) for d in dims)
        if len(dims) < 2 or min(dims) < 1 or dims[-1] != 1:
            raise ValueError(f"invalid dims {dims}")
        rng = np.random.default_rng(seed)
        ws, bs = [], []
        for a, b in zip(dims[:-1], dims[1:]):
            lim = np.sqrt(1.0 / a)
            ws.append(rng.uniform(-lim, lim, size=(a, b)))
            bs.append(rng.uniform(-lim, lim, size=b))
        return cls(ws, bs)

    @classmethod
    def zeros(cls, dims: Sequence[int]) -> "Mlp":
        return cls([np.zeros((a, b)) for a, b in zip(dims[:-1], dims[1:])],
                   [np.zeros(b) for b in dims[1:]])

    @property
    def params(self) -> list[np.ndarray]:
        """Parameter arrays in canonical order (W0, b0, W1, b1, ...); live views."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    @property
    def parameter_count(self) -> int:
        return parameter_count(self.dims)

    def copy(self) -> "Mlp":
        return Mlp([W.copy() for W in self.weights], [b.copy() for b in self.biases])

    def forward_batch(self, X: np.ndarray, keep: bool = False):
        """Outputs for each row of ``X``; with ``keep`` also return the activations."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.dims[0]:
            raise ValueError(f"expected input of shape (B, {self.dims[0]}), got {X.shape}")
        acts = [X]
        h = X
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ W + b
            h = z if i == last else np.tanh(z)
            acts.append(h)
        out = h[:, 0]
        return (out, acts) if keep else out

    def forward(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dims[0],):
            raise ValueError(f"expected input of length {self.dims[0]}, got shape {x.shape}")
        return float(self.forward_batch(x[None, :])[0])

    def backward_batch(self, acts: list[np.ndarray], upstream: np.ndarray):
        """Gradients of sum_i upstream[i] * out_i.

        Returns (param grads in ``params`` order, input grads of shape (B, d)).
        """
        g = np.asarray(upstream, dtype=np.float64).reshape(-1, 1)
        grads: list[np.ndarray] = []
        last = len(self.weights) - 1
        for i in range(last, -1, -1):
            if i != last:
                g = g * (1.0 - acts[i + 1] ** 2)
            grads.append(g.sum(axis=0))
            grads.append(acts[i].T @ g)
            g = g @ self.weights[i].T
        grads.reverse()  # -> W0, b0, W1, b1, ...
        return grads, g

    def backward(self, x, upstream_grad: float):
        _, acts = self.forward_batch(np.asarray(x, dtype=np.float64)[None, :], keep=True)
        grads, gx = self.backward_batch(acts, np.array([upstream_grad]))
        return grads, gx[0]

    def save(self, path):
        lines = [CKPT_MAGIC, " ".join(str(d) for d in self.dims)]
        for p in self.params:
            lines.extend(repr(float(v)) for v in p.ravel())
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Mlp":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise CheckpointFormatError(f"{path}: {e}") from None
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if len(lines) < 2 or lines[0] != CKPT_MAGIC:
            raise CheckpointFormatError(f"{path}: missing '{CKPT_MAGIC}' header")
        try:
            dims = [int(t) for t in lines[1].split()]
            values = [float(t) for t in lines[2:]]
        except ValueError as e:
            raise CheckpointFormatError(f"{path}: {e}") from None
        if len(dims) < 2 or min(dims) < 1 or dims[-1] != 1:
            raise CheckpointFormatError(f"{path}: bad dims {dims}")
        if len(values) != parameter_count(dims):
            raise CheckpointFormatError(
                f"{path}: expected {parameter_count(dims)} parameters, found {len(values)}")
        net = cls.zeros(dims)
        off = 0
        for p in net.params:
            n = p.size
            p[...] = np.asarray(values[off:off + n]).reshape(p.shape)
            off += n
        return net


@dataclass
class AdamW:
    """Decoupled weight decay Adam, updating parameter arrays in place."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    step_count: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]):
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        if len(grads) != len(params) or any(g.shape != p.shape for g, p in zip(grads, params)):
            raise ValueError("gradient shapes do not match parameters")
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            p *= 1.0 - self.lr * self.weight_decay
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
        return params
