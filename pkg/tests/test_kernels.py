"""Compiled kernels and the numpy fallback must agree."""

import numpy as np
import pytest

from actionseq import kernels
from actionseq import _core_np

needs_ext = pytest.mark.skipif(not kernels.ext_available(), reason="compiled core not built")


def both(fn_name, *args):
    from actionseq import _core

    ext = getattr(_core, fn_name)(*[np.copy(a) if isinstance(a, np.ndarray) else a for a in args])
    ref = getattr(_core_np, fn_name)(*[np.copy(a) if isinstance(a, np.ndarray) else a for a in args])
    return ext, ref


def assert_close(a, b):
    if isinstance(a, tuple):
        for x, y in zip(a, b):
            assert_close(x, y)
    elif isinstance(a, np.ndarray):
        np.testing.assert_allclose(a, b, rtol=1e-5, atol=1e-6)
    else:
        assert a == pytest.approx(b, rel=1e-5, abs=1e-6)


@needs_ext
def test_softmax_parity(rng):
    x = rng.standard_normal((50, 17)).astype(np.float32) * 5
    assert_close(*both("softmax_fwd", x, None))
    mask = (rng.random((50, 17)) < 0.6).astype(np.uint8)
    mask[:, 0] = 1
    assert_close(*both("softmax_fwd", x, mask))
    y = _core_np.softmax_fwd(x, None)
    dy = rng.standard_normal(x.shape).astype(np.float32)
    assert_close(*both("softmax_bwd", y, dy))


@needs_ext
def test_masked_softmax_zeroes_match(rng):
    from actionseq import _core

    x = rng.standard_normal((8, 9)).astype(np.float32)
    mask = np.zeros((8, 9), dtype=np.uint8)
    mask[:, :4] = 1
    for impl in (_core, _core_np):
        y = impl.softmax_fwd(x, mask)
        assert np.all(y[:, 4:] == 0.0)


@needs_ext
def test_layer_norm_parity(rng):
    x = rng.standard_normal((30, 24)).astype(np.float32)
    gain = rng.standard_normal(24).astype(np.float32)
    offset = rng.standard_normal(24).astype(np.float32)
    (y1, xh1, i1), (y2, xh2, i2) = both("layer_norm_fwd", x, gain, offset, 1e-5)
    assert_close(y1, y2)
    dy = rng.standard_normal(x.shape).astype(np.float32)
    assert_close(*both("layer_norm_bwd", dy, xh2, i2, gain))


@needs_ext
def test_cross_entropy_parity(rng):
    logits = rng.standard_normal((40, 11)).astype(np.float32) * 3
    targets = rng.integers(0, 11, size=40).astype(np.int64)
    ignore = (rng.random(40) < 0.2).astype(np.uint8)
    (l1, p1, n1), (l2, p2, n2) = both("cross_entropy_fwd", logits, targets, ignore)
    assert n1 == n2
    assert l1 == pytest.approx(l2, rel=1e-5)
    assert_close(p1, p2)
    assert_close(*both("cross_entropy_bwd", p2, targets, ignore, n2, 1.0))


@needs_ext
def test_adamw_parity(rng):
    from actionseq import _core

    param0 = rng.standard_normal(100).astype(np.float32)
    grad = rng.standard_normal(100).astype(np.float32)
    results = []
    for impl in (_core, _core_np):
        param = param0.copy()
        m = np.zeros(100, dtype=np.float32)
        v = np.zeros(100, dtype=np.float32)
        for t in range(1, 4):
            impl.adamw_update(param, grad, m, v, t, 2.5e-4, 0.9, 0.999, 1e-8, 1e-5)
        results.append(param)
    np.testing.assert_allclose(results[0], results[1], rtol=1e-5, atol=1e-7)


def test_backend_switch_roundtrip():
    original = kernels.backend_name()
    kernels.use("python")
    assert kernels.backend_name() == "python"
    if kernels.ext_available():
        kernels.use("ext")
        assert kernels.backend_name() == "ext"
    kernels.use(original)
    with pytest.raises(ValueError):
        kernels.use("cuda")
