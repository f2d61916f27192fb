"""NN ops built on the tensor engine, with fused forward/backward kernels."""

from __future__ import annotations

import math

import numpy as np

from .. import kernels
from .tensor import Tensor, _node, add, matmul, mul, _wrap


def affine(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """y = x @ W + b over the last axis."""
    if x.shape[-1] != weight.shape[0]:
        raise ValueError(
            f"affine shape mismatch: x {x.shape} has inner dim {x.shape[-1]}, "
            f"weight {weight.shape} expects {weight.shape[0]}"
        )
    if weight.shape[1] != bias.shape[-1]:
        raise ValueError(
            f"affine shape mismatch: weight {weight.shape} vs bias {bias.shape}"
        )
    return add(matmul(x, weight), bias)


def _rows(x: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(x.reshape(-1, x.shape[-1]))


def softmax(x: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """Softmax over the last axis.

    ``mask`` is a boolean array broadcastable to ``x.shape``; True means the
    entry may receive weight. Masked entries come out exactly 0.0.
    """
    x2 = _rows(x.data)
    mask2 = None
    if mask is not None:
        mask2 = np.ascontiguousarray(
            np.broadcast_to(mask, x.data.shape).reshape(x2.shape).astype(np.uint8)
        )
    y2 = kernels.softmax_fwd(x2, mask2)
    y = y2.reshape(x.data.shape)

    def backward(g: np.ndarray) -> None:
        if x.requires_grad:
            dx = kernels.softmax_bwd(y2, _rows(g))
            x._accumulate(dx.reshape(x.data.shape))

    return _node(y, (x,), backward)


def layer_norm(x: Tensor, gain: Tensor, offset: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then scale and shift."""
    d = x.shape[-1]
    if d < 2:
        raise ValueError(f"layer_norm needs a feature axis of >=2, got {d}")
    if eps <= 0:
        raise ValueError("layer_norm eps must be positive")
    if gain.shape != (d,) or offset.shape != (d,):
        raise ValueError(
            f"layer_norm gain/offset must have shape ({d},), "
            f"got {gain.shape} and {offset.shape}"
        )
    x2 = _rows(x.data)
    y2, xhat, inv_std = kernels.layer_norm_fwd(x2, gain.data, offset.data, eps)

    def backward(g: np.ndarray) -> None:
        dx, dgain, doffset = kernels.layer_norm_bwd(_rows(g), xhat, inv_std, gain.data)
        if x.requires_grad:
            x._accumulate(dx.reshape(x.data.shape))
        if gain.requires_grad:
            gain._accumulate(dgain)
        if offset.requires_grad:
            offset._accumulate(doffset)

    return _node(y2.reshape(x.data.shape), (x, gain, offset), backward)


def cross_entropy(
    logits: Tensor, targets: np.ndarray, ignore: np.ndarray | None = None
) -> Tensor:
    """Mean -log softmax(logits)[target] over rows where ``ignore`` is False.

    ``logits`` is (*, C); targets and ignore flatten to one entry per row.
    Rows that are ignored contribute nothing and do not count in the mean.
    """
    l2 = _rows(logits.data)
    n, c = l2.shape
    tgt = np.ascontiguousarray(np.asarray(targets, dtype=np.int64).reshape(-1))
    if tgt.shape[0] != n:
        raise ValueError(f"{tgt.shape[0]} targets for {n} logit rows")
    if ignore is None:
        ign = np.zeros(n, dtype=np.uint8)
    else:
        ign = np.ascontiguousarray(np.asarray(ignore).reshape(-1).astype(np.uint8))
    used = ign == 0
    if used.any():
        bad = (tgt[used] < 0) | (tgt[used] >= c)
        if bad.any():
            raise ValueError(
                f"target index out of range [0, {c}): {tgt[used][bad][:5].tolist()}"
            )
    loss, probs, n_used = kernels.cross_entropy_fwd(l2, tgt, ign)

    def backward(g: np.ndarray) -> None:
        if logits.requires_grad:
            dl = kernels.cross_entropy_bwd(probs, tgt, ign, n_used, float(g.reshape(())))
            logits._accumulate(dl.reshape(logits.data.shape))

    return _node(np.float32(loss), (logits,), backward)


def dropout(x: Tensor, p: float, rng: np.random.Generator | None, training: bool) -> Tensor:
    if not training or p <= 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs an rng")
    keep = (rng.random(x.shape) >= p).astype(np.float32) / np.float32(1.0 - p)
    return mul(x, _wrap(keep))


def positional_encoding(length: int, d: int) -> np.ndarray:
    """Sinusoidal position table: sin on even dims, cos on odd dims."""
    if d % 2 != 0:
        raise ValueError(f"positional encoding width must be even, got {d}")
    pos = np.arange(length, dtype=np.float64)[:, None]
    i2 = np.arange(0, d, 2, dtype=np.float64)
    angles = pos / np.power(10000.0, i2 / d)
    pe = np.empty((length, d), dtype=np.float32)
    pe[:, 0::2] = np.sin(angles)
    pe[:, 1::2] = np.cos(angles)
    return pe


def multi_head_attention(
    q: Tensor,
    k: Tensor,
    v: Tensor,
    heads: int,
    wq: Tensor,
    bq: Tensor,
    wk: Tensor,
    bk: Tensor,
    wv: Tensor,
    bv: Tensor,
    wo: Tensor,
    bo: Tensor,
    mask: np.ndarray | None = None,
) -> Tensor:
    """Scaled dot-product attention with per-head projections.

    q: (B, L_q, d); k, v: (B, L_kv, d); mask: bool broadcastable to
    (B, heads, L_q, L_kv), True = may attend. Masked positions get exactly
    zero attention weight, so outputs are bitwise independent of the
    key/value content they mask out.
    """
    from .tensor import reshape, transpose  # local import keeps module load order simple

    d = q.shape[-1]
    if d % heads != 0:
        raise ValueError(f"d_model {d} not divisible by heads {heads}")
    head_dim = d // heads
    squeeze = q.ndim == 2
    if squeeze:
        q = reshape(q, (1,) + q.shape)
        k = reshape(k, (1,) + k.shape)
        v = reshape(v, (1,) + v.shape)
    b, lq = q.shape[0], q.shape[1]
    lkv = k.shape[1]

    def split(x: Tensor, length: int) -> Tensor:
        return transpose(reshape(x, (b, length, heads, head_dim)), (0, 2, 1, 3))

    qh = split(affine(q, wq, bq), lq)
    kh = split(affine(k, wk, bk), lkv)
    vh = split(affine(v, wv, bv), lkv)
    scores = mul(matmul(qh, transpose(kh, (0, 1, 3, 2))), _wrap(1.0 / math.sqrt(head_dim)))
    if mask is not None:
        mask = np.broadcast_to(mask, (b, heads, lq, lkv))
    weights = softmax(scores, mask=mask)
    ctx = matmul(weights, vh)
    merged = reshape(transpose(ctx, (0, 2, 1, 3)), (b, lq, d))
    out = affine(merged, wo, bo)
    if squeeze:
        out = reshape(out, (lq, d))
    return out
