"""Small module system: containers that own parameters and compose forwards."""

from __future__ import annotations

import numpy as np

from . import functional as F
from .tensor import Parameter, Tensor


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(np.float32)


class Module:
    """Base class; children and parameters are discovered from attributes."""

    def named_parameters(self, prefix: str = ""):
        for attr, value in vars(self).items():
            path = f"{prefix}.{attr}" if prefix else attr
            if isinstance(value, Parameter):
                yield path, value
            elif isinstance(value, Module):
                yield from value.named_parameters(path)
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{path}.{i}")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]


class Linear(Module):
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, scale: float = 1.0):
        self.weight = Parameter(Tensor(scale * xavier_uniform(rng, d_in, d_out)))
        self.bias = Parameter(Tensor(np.zeros(d_out, dtype=np.float32)), is_bias=True)

    def __call__(self, x: Tensor) -> Tensor:
        return F.affine(x, self.weight.tensor, self.bias.tensor)


class LayerNorm(Module):
    def __init__(self, d: int, eps: float = 1e-5):
        self.gain = Parameter(Tensor(np.ones(d, dtype=np.float32)))
        self.offset = Parameter(Tensor(np.zeros(d, dtype=np.float32)), is_bias=True)
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        return F.layer_norm(x, self.gain.tensor, self.offset.tensor, self.eps)


class MultiHeadAttention(Module):
    def __init__(self, d: int, heads: int, rng: np.random.Generator):
        if d % heads != 0:
            raise ValueError(f"d_model {d} not divisible by heads {heads}")
        self.heads = heads
        self.wq = Linear(d, d, rng)
        self.wk = Linear(d, d, rng)
        self.wv = Linear(d, d, rng)
        self.wo = Linear(d, d, rng)

    def __call__(self, q: Tensor, k: Tensor, v: Tensor, mask=None) -> Tensor:
        return F.multi_head_attention(
            q, k, v, self.heads,
            self.wq.weight.tensor, self.wq.bias.tensor,
            self.wk.weight.tensor, self.wk.bias.tensor,
            self.wv.weight.tensor, self.wv.bias.tensor,
            self.wo.weight.tensor, self.wo.bias.tensor,
            mask=mask,
        )


class FeedForward(Module):
    """Two-layer position-wise MLP with ReLU, inner width 4x."""

    def __init__(self, d: int, rng: np.random.Generator, inner: int | None = None):
        from .tensor import relu

        self._relu = relu
        self.lin1 = Linear(d, inner if inner is not None else 4 * d, rng)
        self.lin2 = Linear(self.lin1.weight.data.shape[1], d, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return self.lin2(self._relu(self.lin1(x)))
