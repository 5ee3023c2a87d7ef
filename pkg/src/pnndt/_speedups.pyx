"""Compiled implementations of the hot kernels (see _kernels_py for contracts)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, isfinite

cnp.import_array()

cdef enum:
    _CONVERGED = 0
    _MAX_STEPS = 1
    _ZERO_NORM = 2
    _DIVERGED = 3

STOP_CONVERGED = _CONVERGED
STOP_MAX_STEPS = _MAX_STEPS
STOP_ZERO_NORM = _ZERO_NORM
STOP_DIVERGED = _DIVERGED

cdef double WEIGHT_LIMIT_C = 1e12
WEIGHT_LIMIT = WEIGHT_LIMIT_C


def fit_weights_kernel(double[:, ::1] ga, double[::1] ya,
                       double[:, ::1] gb, double[::1] yb,
                       double[::1] w0, double chi, double delta, int max_steps):
    """Iterative projection fit of a 4-weight neuron (compiled path)."""
    cdef Py_ssize_t na = ga.shape[0]
    cdef Py_ssize_t nb = gb.shape[0]
    cdef Py_ssize_t i, k
    cdef double fro2 = 0.0
    cdef double w[4]
    cdef double grad[4]
    cdef double r, pred, acc, eb_prev, eb_k, scale
    cdef int steps = 0, status = _MAX_STEPS, j, diverged

    for i in range(na):
        for j in range(4):
            fro2 += ga[i, j] * ga[i, j]
    if fro2 == 0.0:
        return np.asarray(w0).copy(), np.empty(0), 0, _ZERO_NORM
    scale = chi / fro2

    for j in range(4):
        w[j] = w0[j]

    acc = 0.0
    for i in range(nb):
        pred = w[0] * gb[i, 0] + w[1] * gb[i, 1] + w[2] * gb[i, 2] + w[3] * gb[i, 3]
        r = pred - yb[i]
        acc += r * r
    eb_prev = acc / nb

    eb_arr = np.empty(max_steps)
    cdef double[::1] eb = eb_arr

    with nogil:
        for k in range(max_steps):
            for j in range(4):
                grad[j] = 0.0
            for i in range(na):
                pred = w[0] * ga[i, 0] + w[1] * ga[i, 1] + w[2] * ga[i, 2] + w[3] * ga[i, 3]
                r = pred - ya[i]
                grad[0] += ga[i, 0] * r
                grad[1] += ga[i, 1] * r
                grad[2] += ga[i, 2] * r
                grad[3] += ga[i, 3] * r
            diverged = 0
            for j in range(4):
                w[j] -= scale * grad[j]
                if not isfinite(w[j]) or fabs(w[j]) > WEIGHT_LIMIT_C:
                    diverged = 1
            steps = <int>k + 1
            if diverged:
                status = _DIVERGED
                break
            acc = 0.0
            for i in range(nb):
                pred = w[0] * gb[i, 0] + w[1] * gb[i, 1] + w[2] * gb[i, 2] + w[3] * gb[i, 3]
                r = pred - yb[i]
                acc += r * r
            eb_k = acc / nb
            eb[k] = eb_k
            if eb_prev - eb_k < delta:
                status = _CONVERGED
                break
            eb_prev = eb_k

    w_out = np.empty(4)
    for j in range(4):
        w_out[j] = w[j]
    cdef int n_logged = steps if status != _DIVERGED else steps - 1
    return w_out, eb_arr[:n_logged].copy(), steps, status


def threshold_errors(double[::1] sorted_values, long long[::1] cum_ones,
                     double[::1] qs):
    """Misclassification count for each candidate threshold (compiled path)."""
    cdef Py_ssize_t n = sorted_values.shape[0]
    cdef Py_ssize_t m = qs.shape[0]
    cdef long long n1 = cum_ones[n]
    cdef long long n0 = <long long>n - n1
    cdef Py_ssize_t t, lo, hi, mid
    cdef double q
    cdef long long ones_left, zeros_left, a, b

    out_arr = np.empty(m, dtype=np.int64)
    cdef long long[::1] out = out_arr

    with nogil:
        for t in range(m):
            q = qs[t]
            lo = 0
            hi = n
            while lo < hi:
                mid = (lo + hi) >> 1
                if sorted_values[mid] < q:
                    lo = mid + 1
                else:
                    hi = mid
            ones_left = cum_ones[lo]
            zeros_left = <long long>lo - ones_left
            a = ones_left if ones_left < zeros_left else zeros_left
            b = n1 - ones_left
            if n0 - zeros_left < b:
                b = n0 - zeros_left
            out[t] = a + b
    return out_arr
