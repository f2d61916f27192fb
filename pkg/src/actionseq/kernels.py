"""Backend selection for the hot kernels.

The Cython extension (actionseq._core) is used when it imported cleanly;
otherwise the numpy fallback takes over. Selection happens once at import
time and can be pinned with ACTIONSEQ_KERNELS=ext|python|auto, or switched
at runtime with :func:`use` (the benchmark harness compares both).
"""

from __future__ import annotations

import os

from . import _core_np

try:
    from . import _core as _core_ext  # type: ignore[attr-defined]
except ImportError:
    _core_ext = None

_requested = os.environ.get("ACTIONSEQ_KERNELS", "auto")
if _requested == "ext" and _core_ext is None:
    raise ImportError("ACTIONSEQ_KERNELS=ext but the compiled core is not importable")

_impl = _core_ext if (_core_ext is not None and _requested != "python") else _core_np


def backend_name() -> str:
    return "ext" if _impl is _core_ext else "python"


def ext_available() -> bool:
    return _core_ext is not None


def use(name: str) -> None:
    """Switch kernel backend at runtime ('ext' or 'python')."""
    global _impl
    if name == "python":
        _impl = _core_np
    elif name == "ext":
        if _core_ext is None:
            raise ValueError("compiled kernel core is not available")
        _impl = _core_ext
    else:
        raise ValueError(f"unknown kernel backend {name!r}")


def softmax_fwd(x, mask=None):
    return _impl.softmax_fwd(x, mask)


def softmax_bwd(y, dy):
    return _impl.softmax_bwd(y, dy)


def layer_norm_fwd(x, gain, offset, eps):
    return _impl.layer_norm_fwd(x, gain, offset, eps)


def layer_norm_bwd(dy, xhat, inv_std, gain):
    return _impl.layer_norm_bwd(dy, xhat, inv_std, gain)


def cross_entropy_fwd(logits, targets, ignore):
    return _impl.cross_entropy_fwd(logits, targets, ignore)


def cross_entropy_bwd(probs, targets, ignore, n_used, upstream):
    return _impl.cross_entropy_bwd(probs, targets, ignore, n_used, upstream)


def adamw_update(param, grad, m, v, t, lr, beta1, beta2, eps, weight_decay):
    return _impl.adamw_update(param, grad, m, v, t, lr, beta1, beta2, eps, weight_decay)
