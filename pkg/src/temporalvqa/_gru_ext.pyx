# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled GRU layer kernels; the hot loops of encoder/decoder training.

Drop-in replacement for temporalvqa._gru_numpy with the same call contract;
selected at import by temporalvqa.backend.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, tanh

cnp.import_array()


cdef inline double _sigmoid(double a) noexcept nogil:
    return 1.0 / (1.0 + exp(-a))


cdef void _matvec(const double[:, ::1] w, const double[::1] v, double[::1] out,
                  bint accumulate) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef Py_ssize_t rows = w.shape[0]
    cdef Py_ssize_t cols = w.shape[1]
    cdef double acc
    for i in range(rows):
        acc = out[i] if accumulate else 0.0
        for j in range(cols):
            acc += w[i, j] * v[j]
        out[i] = acc


cdef void _matvec_t(const double[:, ::1] w, const double[::1] v, double[::1] out,
                    bint accumulate) noexcept nogil:
    # out += w.T @ v  (w is rows x cols, out has length cols)
    cdef Py_ssize_t i, j
    cdef Py_ssize_t rows = w.shape[0]
    cdef Py_ssize_t cols = w.shape[1]
    if not accumulate:
        for j in range(cols):
            out[j] = 0.0
    for i in range(rows):
        for j in range(cols):
            out[j] += w[i, j] * v[i]


cdef void _outer_acc(double[:, ::1] acc, const double[::1] a, const double[::1] b) noexcept nogil:
    cdef Py_ssize_t i, j
    for i in range(a.shape[0]):
        for j in range(b.shape[0]):
            acc[i, j] += a[i] * b[j]


def layer_forward(double[:, ::1] wxr, double[:, ::1] whr,
                  double[:, ::1] wxz, double[:, ::1] whz,
                  double[:, ::1] wxh, double[:, ::1] whh,
                  double[:, ::1] x_seq, double[::1] h0):
    """Run one GRU layer over x_seq (T, Din) from h0 (H,).

    Returns (h_seq, reset, update, cand), each (T, H).
    """
    cdef Py_ssize_t t_len = x_seq.shape[0]
    cdef Py_ssize_t hidden = h0.shape[0]
    h_seq_arr = np.empty((t_len, hidden))
    reset_arr = np.empty((t_len, hidden))
    update_arr = np.empty((t_len, hidden))
    cand_arr = np.empty((t_len, hidden))
    gated_arr = np.empty(hidden)
    pre_arr = np.empty(hidden)
    cdef double[:, ::1] h_seq = h_seq_arr
    cdef double[:, ::1] reset = reset_arr
    cdef double[:, ::1] update = update_arr
    cdef double[:, ::1] cand = cand_arr
    cdef double[::1] gated = gated_arr
    cdef double[::1] pre = pre_arr
    cdef double[::1] h_prev
    cdef Py_ssize_t t, i
    with nogil:
        for t in range(t_len):
            h_prev = h0 if t == 0 else h_seq[t - 1]
            _matvec(wxr, x_seq[t], pre, False)
            _matvec(whr, h_prev, pre, True)
            for i in range(hidden):
                reset[t, i] = _sigmoid(pre[i])
            _matvec(wxz, x_seq[t], pre, False)
            _matvec(whz, h_prev, pre, True)
            for i in range(hidden):
                update[t, i] = _sigmoid(pre[i])
            for i in range(hidden):
                gated[i] = reset[t, i] * h_prev[i]
            _matvec(wxh, x_seq[t], pre, False)
            _matvec(whh, gated, pre, True)
            for i in range(hidden):
                cand[t, i] = tanh(pre[i])
                h_seq[t, i] = (1.0 - update[t, i]) * h_prev[i] + update[t, i] * cand[t, i]
    return h_seq_arr, reset_arr, update_arr, cand_arr


def layer_backward(double[:, ::1] wxr, double[:, ::1] whr,
                   double[:, ::1] wxz, double[:, ::1] whz,
                   double[:, ::1] wxh, double[:, ::1] whh,
                   double[:, ::1] x_seq, double[::1] h0,
                   double[:, ::1] h_seq, double[:, ::1] reset,
                   double[:, ::1] update, double[:, ::1] cand,
                   double[:, ::1] d_h, double[::1] d_h_last):
    """Reverse-mode pass for layer_forward.

    Returns (dx_seq, dh0, dwxr, dwhr, dwxz, dwhz, dwxh, dwhh).
    """
    cdef Py_ssize_t t_len = x_seq.shape[0]
    cdef Py_ssize_t din = x_seq.shape[1]
    cdef Py_ssize_t hidden = h0.shape[0]
    dx_seq_arr = np.zeros((t_len, din))
    dwxr_arr = np.zeros((hidden, din))
    dwhr_arr = np.zeros((hidden, hidden))
    dwxz_arr = np.zeros((hidden, din))
    dwhz_arr = np.zeros((hidden, hidden))
    dwxh_arr = np.zeros((hidden, din))
    dwhh_arr = np.zeros((hidden, hidden))
    carry_arr = np.array(d_h_last, copy=True)
    scratch = np.empty((6, hidden))
    cdef double[:, ::1] dx_seq = dx_seq_arr
    cdef double[:, ::1] dwxr = dwxr_arr
    cdef double[:, ::1] dwhr = dwhr_arr
    cdef double[:, ::1] dwxz = dwxz_arr
    cdef double[:, ::1] dwhz = dwhz_arr
    cdef double[:, ::1] dwxh = dwxh_arr
    cdef double[:, ::1] dwhh = dwhh_arr
    cdef double[::1] carry = carry_arr
    cdef double[:, ::1] tmp = scratch
    cdef double[::1] dh = tmp[0]
    cdef double[::1] da_c = tmp[1]
    cdef double[::1] gated = tmp[2]
    cdef double[::1] d_gated = tmp[3]
    cdef double[::1] da_z = tmp[4]
    cdef double[::1] da_r = tmp[5]
    cdef double[::1] h_prev
    cdef Py_ssize_t t, i
    cdef double r, z, c, dz_i, dr_i
    with nogil:
        for t in range(t_len - 1, -1, -1):
            h_prev = h0 if t == 0 else h_seq[t - 1]
            for i in range(hidden):
                dh[i] = d_h[t, i] + carry[i]
            for i in range(hidden):
                r = reset[t, i]
                z = update[t, i]
                c = cand[t, i]
                dz_i = dh[i] * (c - h_prev[i])
                da_c[i] = dh[i] * z * (1.0 - c * c)
                da_z[i] = dz_i * z * (1.0 - z)
                gated[i] = r * h_prev[i]
                carry[i] = dh[i] * (1.0 - z)
            _outer_acc(dwxh, da_c, x_seq[t])
            _outer_acc(dwhh, da_c, gated)
            _matvec_t(wxh, da_c, dx_seq[t], True)
            _matvec_t(whh, da_c, d_gated, False)
            for i in range(hidden):
                r = reset[t, i]
                dr_i = d_gated[i] * h_prev[i]
                da_r[i] = dr_i * r * (1.0 - r)
                carry[i] += d_gated[i] * r
            _outer_acc(dwxz, da_z, x_seq[t])
            _outer_acc(dwhz, da_z, h_prev)
            _matvec_t(wxz, da_z, dx_seq[t], True)
            _matvec_t(whz, da_z, carry, True)
            _outer_acc(dwxr, da_r, x_seq[t])
            _outer_acc(dwhr, da_r, h_prev)
            _matvec_t(wxr, da_r, dx_seq[t], True)
            _matvec_t(whr, da_r, carry, True)
    return (dx_seq_arr, carry_arr, dwxr_arr, dwhr_arr, dwxz_arr, dwhz_arr,
            dwxh_arr, dwhh_arr)
