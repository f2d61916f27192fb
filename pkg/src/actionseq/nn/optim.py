"""AdamW with decoupled weight decay; decay skips bias-flagged parameters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from .tensor import Parameter


@dataclass
class OptimizerState:
    step_count: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)


def adamw_step(
    params: list[Parameter],
    grads: list[np.ndarray],
    state: OptimizerState,
    lr: float,
    weight_decay: float,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
) -> OptimizerState:
    """One update over all parameters, in place on their data buffers.

    Decay is decoupled (applied directly to the weights before the moment
    term) and only touches parameters with ``is_bias`` False.
    """
    state.step_count += 1
    t = state.step_count
    for p, g in zip(params, grads):
        if p.name not in state.first_moment:
            state.first_moment[p.name] = np.zeros_like(p.data)
            state.second_moment[p.name] = np.zeros_like(p.data)
        wd = 0.0 if p.is_bias else weight_decay
        kernels.adamw_update(
            p.data.reshape(-1),
            np.ascontiguousarray(g, dtype=np.float32).reshape(-1),
            state.first_moment[p.name].reshape(-1),
            state.second_moment[p.name].reshape(-1),
            t, lr, betas[0], betas[1], eps, wd,
        )
    return state


class AdamW:
    def __init__(
        self,
        params: list[Parameter],
        lr: float,
        weight_decay: float = 0.0,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise ValueError("parameter names must be unique")
        self.params = params
        self.lr = lr
        self.weight_decay = weight_decay
        self.betas = betas
        self.eps = eps
        self.state = OptimizerState()

    def step(self) -> None:
        grads = []
        for p in self.params:
            g = p.grad
            grads.append(np.zeros_like(p.data) if g is None else g)
        adamw_step(
            self.params, grads, self.state,
            self.lr, self.weight_decay, self.betas, self.eps,
        )

    def zero_grad(self) -> None:
        for p in self.params:
            p.tensor.zero_grad()
