"""Finite-difference verification of analytic gradients.

Central differences with h = 1e-3 on float32 data; error is reported as
|analytic - numeric| / max(|analytic|, |numeric|, 1), i.e. relative above
magnitude one and absolute below it, which is the honest reading for
32-bit arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import functional as F
from .tensor import Tensor, _wrap, mul, tensor_sum


@dataclass
class GradCheckReport:
    max_rel_error: float
    tolerance: float
    passed: bool
    failure: str | None = None


def _rel_error(a: float, n: float) -> float:
    return abs(a - n) / max(abs(a), abs(n), 1.0)


def grad_check(
    f: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    tolerance: float = 1e-3,
    h: float = 1e-3,
) -> GradCheckReport:
    """Check every component of every grad-requiring input of scalar f()."""
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    for t in inputs:
        t.zero_grad()
    out = f()
    if out.size != 1:
        raise ValueError("grad_check needs a scalar-valued function")
    out.backward()
    max_err = 0.0
    for i, t in enumerate(inputs):
        if not t.requires_grad:
            continue
        grad = t.grad if t.grad is not None else np.zeros_like(t.data)
        if not np.all(np.isfinite(grad)):
            bad = np.argwhere(~np.isfinite(grad))[0].tolist()
            return GradCheckReport(
                float("inf"), tolerance, False,
                f"non-finite gradient in input {i} at index {bad}",
            )
        flat = t.data.reshape(-1)
        gflat = grad.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            fp = f().item()
            flat[j] = orig - h
            fm = f().item()
            flat[j] = orig
            numeric = (fp - fm) / (2.0 * h)
            max_err = max(max_err, _rel_error(float(gflat[j]), numeric))
    return GradCheckReport(max_err, tolerance, max_err < tolerance)


def grad_check_sampled(
    f: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    n_samples: int,
    rng: np.random.Generator,
    tolerance: float = 5e-3,
    h: float = 1e-3,
) -> GradCheckReport:
    """Check a random sample of components; for losses with many parameters."""
    for t in inputs:
        t.zero_grad()
    out = f()
    out.backward()
    checkable = [t for t in inputs if t.requires_grad]
    max_err = 0.0
    for _ in range(n_samples):
        t = checkable[int(rng.integers(len(checkable)))]
        if t.grad is None or not np.all(np.isfinite(t.grad)):
            return GradCheckReport(float("inf"), tolerance, False, "missing/non-finite gradient")
        j = int(rng.integers(t.data.size))
        flat = t.data.reshape(-1)
        orig = flat[j]
        flat[j] = orig + h
        fp = f().item()
        flat[j] = orig - h
        fm = f().item()
        flat[j] = orig
        numeric = (fp - fm) / (2.0 * h)
        max_err = max(max_err, _rel_error(float(t.grad.reshape(-1)[j]), numeric))
    return GradCheckReport(max_err, tolerance, max_err < tolerance)


def _weighted_sum(out: Tensor, weights: np.ndarray) -> Tensor:
    return tensor_sum(mul(out, _wrap(weights)))


def standard_op_checks(
    rng: np.random.Generator, instances: int = 100, tolerance: float = 1e-3
) -> dict[str, GradCheckReport]:
    """Gradient-check every differentiable op on random small instances."""

    def rand(*shape: int) -> Tensor:
        return Tensor(rng.standard_normal(shape).astype(np.float32), requires_grad=True)

    reports: dict[str, GradCheckReport] = {}

    def run(name: str, build: Callable[[], tuple[Callable[[], Tensor], list[Tensor]]]) -> None:
        worst = GradCheckReport(0.0, tolerance, True)
        for _ in range(instances):
            f, inputs = build()
            rep = grad_check(f, inputs, tolerance=tolerance)
            if rep.max_rel_error > worst.max_rel_error or not rep.passed:
                worst = rep
            if rep.failure:
                break
        reports[name] = worst

    def build_affine():
        x, w, b = rand(3, 4), rand(4, 5), rand(5)
        c = rng.uniform(-1, 1, (3, 5)).astype(np.float32) / 4.0
        return (lambda: _weighted_sum(F.affine(x, w, b), c)), [x, w, b]

    def build_layer_norm():
        x, gain, offset = rand(4, 8), rand(8), rand(8)
        c = rng.uniform(-1, 1, (4, 8)).astype(np.float32) / 8.0
        return (lambda: _weighted_sum(F.layer_norm(x, gain, offset, 1e-5), c)), [x, gain, offset]

    def build_softmax():
        x = rand(3, 6)
        c = rng.uniform(-1, 1, (3, 6)).astype(np.float32)
        return (lambda: _weighted_sum(F.softmax(x), c)), [x]

    def build_softmax_masked():
        x = rand(3, 6)
        mask = rng.random((3, 6)) < 0.7
        mask[:, 0] = True  # keep every row non-degenerate
        c = rng.uniform(-1, 1, (3, 6)).astype(np.float32)
        return (lambda: _weighted_sum(F.softmax(x, mask=mask), c)), [x]

    def build_cross_entropy():
        logits = rand(6, 7)
        targets = rng.integers(0, 7, size=6)
        ignore = np.zeros(6, dtype=bool)
        ignore[int(rng.integers(6))] = True
        return (lambda: F.cross_entropy(logits, targets, ignore)), [logits]

    def build_attention():
        # weights at realistic init scale keep the f32 finite-difference
        # noise well inside the tolerance
        d, heads, lq, lkv = 8, 2, 4, 5
        q, k, v = rand(lq, d), rand(lkv, d), rand(lkv, d)

        def randp(*shape: int) -> Tensor:
            arr = rng.standard_normal(shape).astype(np.float32) * 0.5
            return Tensor(arr, requires_grad=True)

        params = [randp(d, d) for _ in range(4)] + [randp(d) for _ in range(4)]
        wq, wk, wv, wo, bq, bk, bv, bo = params
        mask = None
        if rng.random() < 0.5:
            mask = np.tril(np.ones((lq, lkv), dtype=bool))
        c = rng.uniform(-1, 1, (lq, d)).astype(np.float32) / 16.0

        def f():
            out = F.multi_head_attention(
                q, k, v, heads, wq, bq, wk, bk, wv, bv, wo, bo, mask=mask
            )
            return _weighted_sum(out, c)

        return f, [q, k, v, *params]

    run("affine", build_affine)
    run("layer_norm", build_layer_norm)
    run("softmax", build_softmax)
    run("softmax_masked", build_softmax_masked)
    run("cross_entropy", build_cross_entropy)
    run("attention", build_attention)
    return reports
