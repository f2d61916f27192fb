# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: fused softmax / layer norm / cross entropy / AdamW.

Mirrors actionseq._core_np; matmuls stay in BLAS via numpy, these cover the
memory-bound fused loops that dominate the non-BLAS part of a training step.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport expf, logf, sqrt, sqrtf

cnp.import_array()


def softmax_fwd(const float[:, ::1] x, mask=None):
    cdef Py_ssize_t n = x.shape[0], c = x.shape[1]
    out = np.empty((n, c), dtype=np.float32)
    cdef float[:, ::1] y = out
    cdef const unsigned char[:, ::1] mk
    cdef Py_ssize_t i, j
    cdef float m, s, v
    if mask is None:
        with nogil:
            for i in range(n):
                m = x[i, 0]
                for j in range(1, c):
                    if x[i, j] > m:
                        m = x[i, j]
                s = 0.0
                for j in range(c):
                    v = expf(x[i, j] - m)
                    y[i, j] = v
                    s += v
                for j in range(c):
                    y[i, j] /= s
    else:
        mk = np.ascontiguousarray(mask, dtype=np.uint8)
        with nogil:
            for i in range(n):
                m = 0.0
                s = -1.0  # flags "no allowed entry seen yet"
                for j in range(c):
                    if mk[i, j] and (s < 0.0 or x[i, j] > m):
                        m = x[i, j]
                        s = 0.0
                if s < 0.0:
                    for j in range(c):
                        y[i, j] = 0.0
                    continue
                s = 0.0
                for j in range(c):
                    if mk[i, j]:
                        v = expf(x[i, j] - m)
                        y[i, j] = v
                        s += v
                    else:
                        y[i, j] = 0.0
                for j in range(c):
                    y[i, j] /= s
    return out


def softmax_bwd(const float[:, ::1] y, const float[:, ::1] dy):
    cdef Py_ssize_t n = y.shape[0], c = y.shape[1]
    out = np.empty((n, c), dtype=np.float32)
    cdef float[:, ::1] dx = out
    cdef Py_ssize_t i, j
    cdef float inner
    with nogil:
        for i in range(n):
            inner = 0.0
            for j in range(c):
                inner += dy[i, j] * y[i, j]
            for j in range(c):
                dx[i, j] = y[i, j] * (dy[i, j] - inner)
    return out


def layer_norm_fwd(const float[:, ::1] x, const float[::1] gain,
                   const float[::1] offset, double eps):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    out = np.empty((n, d), dtype=np.float32)
    xhat_arr = np.empty((n, d), dtype=np.float32)
    inv_arr = np.empty((n, 1), dtype=np.float32)
    cdef float[:, ::1] y = out
    cdef float[:, ::1] xhat = xhat_arr
    cdef float[:, ::1] inv = inv_arr
    cdef Py_ssize_t i, j
    cdef float mu, var, xc, istd, epsf = <float>eps
    with nogil:
        for i in range(n):
            mu = 0.0
            for j in range(d):
                mu += x[i, j]
            mu /= d
            var = 0.0
            for j in range(d):
                xc = x[i, j] - mu
                var += xc * xc
            var /= d
            istd = 1.0 / sqrtf(var + epsf)
            inv[i, 0] = istd
            for j in range(d):
                xc = (x[i, j] - mu) * istd
                xhat[i, j] = xc
                y[i, j] = xc * gain[j] + offset[j]
    return out, xhat_arr, inv_arr


def layer_norm_bwd(const float[:, ::1] dy, const float[:, ::1] xhat,
                   const float[:, ::1] inv_std, const float[::1] gain):
    cdef Py_ssize_t n = dy.shape[0], d = dy.shape[1]
    dx_arr = np.empty((n, d), dtype=np.float32)
    dgain_arr = np.zeros(d, dtype=np.float32)
    doffset_arr = np.zeros(d, dtype=np.float32)
    cdef float[:, ::1] dx = dx_arr
    cdef float[::1] dgain = dgain_arr
    cdef float[::1] doffset = doffset_arr
    cdef Py_ssize_t i, j
    cdef float c1, c2, dxh, istd
    with nogil:
        for i in range(n):
            c1 = 0.0
            c2 = 0.0
            for j in range(d):
                dxh = dy[i, j] * gain[j]
                c1 += dxh
                c2 += dxh * xhat[i, j]
            c1 /= d
            c2 /= d
            istd = inv_std[i, 0]
            for j in range(d):
                dxh = dy[i, j] * gain[j]
                dx[i, j] = istd * (dxh - c1 - xhat[i, j] * c2)
                dgain[j] += dy[i, j] * xhat[i, j]
                doffset[j] += dy[i, j]
    return dx_arr, dgain_arr, doffset_arr


def cross_entropy_fwd(const float[:, ::1] logits, const long long[::1] targets,
                      const unsigned char[::1] ignore):
    cdef Py_ssize_t n = logits.shape[0], c = logits.shape[1]
    probs_arr = np.empty((n, c), dtype=np.float32)
    cdef float[:, ::1] probs = probs_arr
    cdef Py_ssize_t i, j, n_used = 0
    cdef float m, s, v
    cdef double total = 0.0
    with nogil:
        for i in range(n):
            m = logits[i, 0]
            for j in range(1, c):
                if logits[i, j] > m:
                    m = logits[i, j]
            s = 0.0
            for j in range(c):
                v = expf(logits[i, j] - m)
                probs[i, j] = v
                s += v
            for j in range(c):
                probs[i, j] /= s
            if not ignore[i]:
                total += logf(s) - (logits[i, targets[i]] - m)
                n_used += 1
    if n_used == 0:
        return 0.0, probs_arr, 0
    return float(total / n_used), probs_arr, n_used


def cross_entropy_bwd(const float[:, ::1] probs, const long long[::1] targets,
                      const unsigned char[::1] ignore, Py_ssize_t n_used,
                      double upstream):
    cdef Py_ssize_t n = probs.shape[0], c = probs.shape[1]
    out = np.empty((n, c), dtype=np.float32)
    cdef float[:, ::1] dl = out
    cdef Py_ssize_t i, j
    cdef float scale = 0.0
    if n_used > 0:
        scale = <float>(upstream / n_used)
    with nogil:
        for i in range(n):
            if ignore[i]:
                for j in range(c):
                    dl[i, j] = 0.0
                continue
            for j in range(c):
                dl[i, j] = probs[i, j] * scale
            dl[i, targets[i]] -= scale
    return out


def adamw_update(float[::1] param, const float[::1] grad, float[::1] m,
                 float[::1] v, long long t, double lr, double beta1,
                 double beta2, double eps, double weight_decay):
    cdef Py_ssize_t n = param.shape[0], i
    cdef float b1 = <float>beta1, b2 = <float>beta2
    cdef float one_m_b1 = <float>(1.0 - beta1), one_m_b2 = <float>(1.0 - beta2)
    cdef float lrf = <float>lr, epsf = <float>eps
    cdef float decay = <float>(lr * weight_decay)
    cdef float inv_bc1 = <float>(1.0 / (1.0 - beta1 ** t))
    cdef float inv_bc2 = <float>(1.0 / (1.0 - beta2 ** t))
    cdef float g, mh, vh
    with nogil:
        for i in range(n):
            g = grad[i]
            if decay != 0.0:
                param[i] -= decay * param[i]
            m[i] = b1 * m[i] + one_m_b1 * g
            v[i] = b2 * v[i] + one_m_b2 * g * g
            mh = m[i] * inv_bc1
            vh = v[i] * inv_bc2
            param[i] -= lrf * mh / (sqrtf(vh) + epsf)
    return None
