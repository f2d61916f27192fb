"""Transformer encoder-decoder with three categorical heads (what / who / when).

Post-norm blocks after the original encoder-decoder design: sublayer, then
dropout, then residual add, then layer norm. Positional encodings are added
after the input projections. The decoder runs with a causal self-attention
mask and full cross-attention over the encoder memory.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import tokens as tk
from .domain import N_SLOTS
from .nn import functional as F
from .nn.modules import FeedForward, LayerNorm, Linear, Module, MultiHeadAttention
from .nn.tensor import Parameter, Tensor, add, reshape


@dataclass(frozen=True)
class ModelConfig:
    n_encoder_layers: int = 2
    n_decoder_layers: int = 2
    heads: int = 4
    d_model: int = 64
    L: int = 250
    dropout: float = 0.1

    def validate(self) -> None:
        if self.d_model % self.heads != 0:
            raise ValueError(f"d_model {self.d_model} not divisible by {self.heads} heads")
        if min(self.n_encoder_layers, self.n_decoder_layers) < 1 or self.L < 4:
            raise ValueError("layers must be >= 1 and L >= 4")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")

    @property
    def encoder_token_width(self) -> int:
        return tk.encoder_width(self.L)

    @property
    def decoder_token_width(self) -> int:
        return tk.decoder_width(self.L)

    @classmethod
    def desk(cls, L: int = 250) -> "ModelConfig":
        return cls(n_encoder_layers=2, n_decoder_layers=2, heads=4, d_model=64, L=L)

    @classmethod
    def full_scale(cls) -> "ModelConfig":
        return cls(n_encoder_layers=6, n_decoder_layers=6, heads=8, d_model=512, L=750)

    def to_dict(self) -> dict:
        return {
            "n_encoder_layers": self.n_encoder_layers,
            "n_decoder_layers": self.n_decoder_layers,
            "heads": self.heads,
            "d_model": self.d_model,
            "L": self.L,
            "dropout": self.dropout,
        }


class HeadOutputs(NamedTuple):
    category: Tensor  # (B, L', 10)
    role: Tensor  # (B, L', 26)
    frame: Tensor  # (B, L', L+2)


class EncoderLayer(Module):
    def __init__(self, d: int, heads: int, dropout: float, rng: np.random.Generator):
        self.attn = MultiHeadAttention(d, heads, rng)
        self.norm1 = LayerNorm(d)
        self.ff = FeedForward(d, rng)
        self.norm2 = LayerNorm(d)
        self.dropout = dropout

    def __call__(self, x, training=False, rng=None):
        a = F.dropout(self.attn(x, x, x), self.dropout, rng, training)
        x = self.norm1(add(x, a))
        f = F.dropout(self.ff(x), self.dropout, rng, training)
        return self.norm2(add(x, f))


class DecoderLayer(Module):
    def __init__(self, d: int, heads: int, dropout: float, rng: np.random.Generator):
        self.self_attn = MultiHeadAttention(d, heads, rng)
        self.norm1 = LayerNorm(d)
        self.cross_attn = MultiHeadAttention(d, heads, rng)
        self.norm2 = LayerNorm(d)
        self.ff = FeedForward(d, rng)
        self.norm3 = LayerNorm(d)
        self.dropout = dropout

    def __call__(self, x, memory, causal_mask, training=False, rng=None):
        a = F.dropout(self.self_attn(x, x, x, mask=causal_mask), self.dropout, rng, training)
        x = self.norm1(add(x, a))
        c = F.dropout(self.cross_attn(x, memory, memory), self.dropout, rng, training)
        x = self.norm2(add(x, c))
        f = F.dropout(self.ff(x), self.dropout, rng, training)
        return self.norm3(add(x, f))


class SequenceDenoiser(Module):
    """The denoising transducer; construction is deterministic per seed."""

    def __init__(self, config: ModelConfig, seed: int):
        config.validate()
        self.config = config
        rng = np.random.default_rng(seed)
        d = config.d_model
        self.encoder_input = Linear(config.encoder_token_width, d, rng)
        self.decoder_input = Linear(config.decoder_token_width, d, rng)
        self.encoder_layers = [
            EncoderLayer(d, config.heads, config.dropout, rng)
            for _ in range(config.n_encoder_layers)
        ]
        self.decoder_layers = [
            DecoderLayer(d, config.heads, config.dropout, rng)
            for _ in range(config.n_decoder_layers)
        ]
        # heads start at a quarter of the Xavier scale so untrained logits sit
        # near zero (chance-level losses) and early updates stay small
        self.category_head = Linear(d, tk.N_TARGET_CATEGORIES, rng, scale=0.25)
        self.role_head = Linear(d, N_SLOTS, rng, scale=0.25)
        self.frame_head = Linear(d, config.L + 2, rng, scale=0.25)
        self._pe = F.positional_encoding(config.L + 2, d)
        self._params: list[Parameter] | None = None

    def parameters(self) -> list[Parameter]:
        if self._params is None:
            named = [(n, p) for n, p in self.named_parameters() if not n.startswith("_")]
            names = [n for n, _ in named]
            if len(set(names)) != len(names):
                raise RuntimeError("duplicate parameter names")
            for n, p in named:
                p.name = n
            self._params = [p for _, p in named]
        return self._params

    def n_parameters(self) -> int:
        return sum(p.data.size for p in self.parameters())

    def _check_batched(self, arr: np.ndarray, width: int, what: str) -> np.ndarray:
        if arr.ndim == 2:
            arr = arr[None]
        if arr.ndim != 3 or arr.shape[-1] != width:
            raise ValueError(
                f"{what} tokens must be (batch, length, {width}); got {arr.shape}"
            )
        return np.ascontiguousarray(arr, dtype=np.float32)

    def encode(self, enc_tokens: np.ndarray, training: bool = False, rng=None) -> Tensor:
        """Full bidirectional self-attention over one window; (B, L, d)."""
        arr = self._check_batched(enc_tokens, self.config.encoder_token_width, "encoder")
        if arr.shape[1] != self.config.L:
            raise ValueError(f"encoder length {arr.shape[1]} != configured L {self.config.L}")
        x = self.encoder_input(Tensor(arr))
        x = add(x, Tensor(self._pe[: arr.shape[1]]))
        for layer in self.encoder_layers:
            x = layer(x, training=training, rng=rng)
        return x

    def decode_teacher_forced(
        self, memory: Tensor, dec_tokens: np.ndarray, training: bool = False, rng=None
    ) -> HeadOutputs:
        """Causally-masked decode of the shifted target sequence.

        Position i of the output predicts target token i+1; the first input
        token must be the start marker.
        """
        arr = self._check_batched(dec_tokens, self.config.decoder_token_width, "decoder")
        if not np.all(arr[:, 0, tk.SOS_CATEGORY] == 1.0):
            raise ValueError("decoder input must start with the SOS token")
        lp = arr.shape[1]
        x = self.decoder_input(Tensor(arr))
        x = add(x, Tensor(self._pe[:lp]))
        causal = np.tril(np.ones((lp, lp), dtype=bool))
        for layer in self.decoder_layers:
            x = layer(x, memory, causal, training=training, rng=rng)
        return HeadOutputs(
            category=self.category_head(x),
            role=self.role_head(x),
            frame=self.frame_head(x),
        )


def init_model(config: ModelConfig, seed: int) -> SequenceDenoiser:
    return SequenceDenoiser(config, seed)


def compute_loss(
    outputs: HeadOutputs,
    category_targets: np.ndarray,
    role_targets: np.ndarray,
    frame_targets: np.ndarray,
    valid: np.ndarray,
    role_valid: np.ndarray,
) -> tuple[Tensor, dict[str, float]]:
    """Unweighted sum of the three cross entropies.

    ``valid`` masks padded positions out of every head; ``role_valid``
    additionally drops positions whose target is a start/end marker, which
    carry no role.
    """
    b, lp, _ = outputs.category.shape
    flat = lambda t, c: reshape(t, (b * lp, c))
    cat = F.cross_entropy(
        flat(outputs.category, tk.N_TARGET_CATEGORIES),
        category_targets.reshape(-1),
        ignore=~valid.reshape(-1),
    )
    role = F.cross_entropy(
        flat(outputs.role, N_SLOTS),
        role_targets.reshape(-1),
        ignore=~role_valid.reshape(-1),
    )
    frame = F.cross_entropy(
        flat(outputs.frame, outputs.frame.shape[-1]),
        frame_targets.reshape(-1),
        ignore=~valid.reshape(-1),
    )
    total = add(add(cat, role), frame)
    parts = {
        "category": float(cat.data),
        "role": float(role.data),
        "frame": float(frame.data),
        "total": float(total.data),
    }
    return total, parts
