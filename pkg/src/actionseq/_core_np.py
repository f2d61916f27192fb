"""Numpy implementations of the hot kernels.

The compiled extension (actionseq._core) mirrors these signatures exactly;
see actionseq.kernels for backend selection. All arrays are float32 and
C-contiguous, shapes are 2D (rows x features) unless noted.
"""

from __future__ import annotations

import numpy as np


def softmax_fwd(x: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """Row-wise softmax with max subtraction.

    ``mask`` (uint8, same shape) marks allowed entries; disallowed entries get
    weight exactly 0.0 and never enter the max, so rows are bitwise invariant
    to the values they mask out.
    """
    if mask is None:
        m = x.max(axis=1, keepdims=True)
        e = np.exp(x - m)
    else:
        allowed = mask.astype(bool)
        m = np.max(np.where(allowed, x, -np.inf), axis=1, keepdims=True)
        e = np.zeros_like(x)
        np.exp(x - m, out=e, where=allowed)
    s = e.sum(axis=1, keepdims=True)
    s[s == 0.0] = 1.0  # fully-masked rows stay all-zero
    return e / s


def softmax_bwd(y: np.ndarray, dy: np.ndarray) -> np.ndarray:
    inner = (dy * y).sum(axis=1, keepdims=True)
    return y * (dy - inner)


def layer_norm_fwd(
    x: np.ndarray, gain: np.ndarray, offset: np.ndarray, eps: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (y, xhat, inv_std); xhat and inv_std are cached for backward."""
    mu = x.mean(axis=1, keepdims=True)
    xc = x - mu
    var = np.mean(xc * xc, axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + np.float32(eps))
    xhat = xc * inv_std
    return xhat * gain + offset, xhat, inv_std


def layer_norm_bwd(
    dy: np.ndarray, xhat: np.ndarray, inv_std: np.ndarray, gain: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    dxhat = dy * gain
    c1 = dxhat.mean(axis=1, keepdims=True)
    c2 = (dxhat * xhat).mean(axis=1, keepdims=True)
    dx = inv_std * (dxhat - c1 - xhat * c2)
    dgain = (dy * xhat).sum(axis=0)
    doffset = dy.sum(axis=0)
    return dx, dgain, doffset


def cross_entropy_fwd(
    logits: np.ndarray, targets: np.ndarray, ignore: np.ndarray
) -> tuple[float, np.ndarray, int]:
    """Mean negative log-likelihood over rows where ``ignore`` is 0.

    Returns (loss, probs, n_used); probs are cached for backward.
    """
    m = logits.max(axis=1, keepdims=True)
    z = logits - m
    e = np.exp(z)
    s = e.sum(axis=1, keepdims=True)
    probs = e / s
    used = ignore == 0
    n_used = int(used.sum())
    if n_used == 0:
        return 0.0, probs, 0
    rows = np.nonzero(used)[0]
    nll = np.log(s[rows, 0]) - z[rows, targets[rows]]
    return float(nll.sum() / n_used), probs, n_used


def cross_entropy_bwd(
    probs: np.ndarray,
    targets: np.ndarray,
    ignore: np.ndarray,
    n_used: int,
    upstream: float,
) -> np.ndarray:
    dlogits = probs.copy()
    rows = np.arange(len(targets))
    dlogits[rows, targets] -= 1.0
    dlogits[ignore != 0] = 0.0
    if n_used > 0:
        dlogits *= np.float32(upstream / n_used)
    return dlogits


def adamw_update(
    param: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    t: int,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
    weight_decay: float,
) -> None:
    """Bias-corrected Adam step with decoupled weight decay, in place on 1D views."""
    if weight_decay != 0.0:
        param -= np.float32(lr * weight_decay) * param
    m *= np.float32(beta1)
    m += np.float32(1.0 - beta1) * grad
    v *= np.float32(beta2)
    v += np.float32(1.0 - beta2) * grad * grad
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    mhat = m * np.float32(1.0 / bc1)
    vhat = v * np.float32(1.0 / bc2)
    param -= np.float32(lr) * mhat / (np.sqrt(vhat) + np.float32(eps))
