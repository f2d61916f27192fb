"""The checker itself: passes correct gradients, catches corrupted ones."""

import numpy as np
import pytest

from actionseq.nn import Tensor, functional as F
from actionseq.nn.gradcheck import GradCheckReport, grad_check, grad_check_sampled
from actionseq.nn.tensor import _node, mul, tensor_sum, _wrap


def weighted(out, c):
    return tensor_sum(mul(out, _wrap(c)))


def test_affine_passes(rng):
    x = Tensor(rng.standard_normal((3, 4)).astype(np.float32), requires_grad=True)
    w = Tensor(rng.standard_normal((4, 2)).astype(np.float32), requires_grad=True)
    b = Tensor(rng.standard_normal(2).astype(np.float32), requires_grad=True)
    c = rng.uniform(-1, 1, (3, 2)).astype(np.float32)
    rep = grad_check(lambda: weighted(F.affine(x, w, b), c), [x, w, b])
    assert rep.passed and rep.max_rel_error < 1e-3


def _scaled_grad_matmul(a, b, factor):
    """Like matmul but its backward is deliberately off by `factor`."""
    data = a.data @ b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(factor * (g @ b.data.T))
        if b.requires_grad:
            b._accumulate(factor * (a.data.T @ g))

    return _node(data, (a, b), backward)


def test_corrupted_gradient_fails(rng):
    a = Tensor(rng.standard_normal((3, 3)).astype(np.float32) + 2.0, requires_grad=True)
    b = Tensor(rng.standard_normal((3, 3)).astype(np.float32) + 2.0, requires_grad=True)
    c = np.ones((3, 3), dtype=np.float32)
    rep = grad_check(lambda: weighted(_scaled_grad_matmul(a, b, 1.01), c), [a, b])
    assert not rep.passed


def test_non_finite_gradient_reports_location(rng):
    a = Tensor(rng.standard_normal((2, 2)).astype(np.float32), requires_grad=True)

    def bad_op(x):
        def backward(g):
            bad = np.full_like(x.data, np.nan)
            x._accumulate(bad)

        return _node(x.data * 2.0, (x,), backward)

    rep = grad_check(lambda: tensor_sum(bad_op(a)), [a])
    assert not rep.passed
    assert rep.failure is not None and "non-finite" in rep.failure


def test_non_scalar_rejected(rng):
    a = Tensor(rng.standard_normal((2, 2)).astype(np.float32), requires_grad=True)
    with pytest.raises(ValueError, match="scalar"):
        grad_check(lambda: mul(a, a), [a])


def test_sampled_check_agrees_with_full(rng):
    x = Tensor(rng.standard_normal((4, 6)).astype(np.float32), requires_grad=True)
    targets = rng.integers(0, 6, size=4)

    def f():
        return F.cross_entropy(x, targets)

    full = grad_check(f, [x])
    sampled = grad_check_sampled(f, [x], n_samples=10, rng=rng)
    assert full.passed and sampled.passed
