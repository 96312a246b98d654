# cython: boundscheck=False, wraparound=False, cdivision=True
"""C implementations of the per-step kernels (reference: pyfallback.py)."""

import numpy as np


def mix_step(const double[:, ::1] V, const double[::1] hu, const double[::1] x,
             double d):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, j
    blend_arr = np.empty(n)
    out_arr = np.empty(n)
    cdef double[::1] blend = blend_arr
    cdef double[::1] out = out_arr
    cdef double acc
    for j in range(n):
        blend[j] = x[j] + hu[j] * (d - x[j])
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += V[i, j] * blend[j]
        out[i] = acc
    return out_arr


def predict_opinion(const double[:, ::1] V, const double[::1] x_prev,
                    const double[::1] y, const double[::1] theta):
    cdef Py_ssize_t n = x_prev.shape[0]
    cdef Py_ssize_t i, j
    blend_arr = np.empty(n)
    out_arr = np.empty(n)
    cdef double[::1] blend = blend_arr
    cdef double[::1] out = out_arr
    cdef double acc
    for j in range(n):
        blend[j] = x_prev[j] + y[j] * theta[j]
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += V[i, j] * blend[j]
        out[i] = acc
    return out_arr


def regressor_correction(const double[:, ::1] V, const double[::1] y,
                         const double[::1] resid):
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t i, j
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double acc
    for j in range(n):
        acc = 0.0
        for i in range(n):
            acc += V[i, j] * resid[i]
        out[j] = y[j] * acc
    return out_arr


def schedule_rollout(const double[:, ::1] V, const double[::1] h,
                     const double[::1] x0, double d, double a, double b,
                     Py_ssize_t T, double budget):
    cdef Py_ssize_t n = x0.shape[0]
    states_arr = np.empty((T + 1, n))
    controls_arr = np.empty((T, n))
    blend_arr = np.empty(n)
    cdef double[:, ::1] states = states_arr
    cdef double[:, ::1] controls = controls_arr
    cdef double[::1] blend = blend_arr
    cdef double rate = a
    cdef double cum = 0.0
    cdef double c, ui, xj, acc
    cdef Py_ssize_t s, i, j, k = 0
    for i in range(n):
        states[0, i] = x0[i]
    for s in range(T):
        c = 0.0
        for i in range(n):
            ui = rate / h[i]
            controls[k, i] = ui
            c += ui
        if cum + c > budget:
            break
        cum += c
        for j in range(n):
            xj = states[k, j]
            blend[j] = xj + (h[j] * controls[k, j]) * (d - xj)
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += V[i, j] * blend[j]
            if acc < 0.0:
                acc = 0.0
            elif acc > 1.0:
                acc = 1.0
            states[k + 1, i] = acc
        k += 1
        rate *= b
    return states_arr[: k + 1].copy(), controls_arr[:k].copy()
