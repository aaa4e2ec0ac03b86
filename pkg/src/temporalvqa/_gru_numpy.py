"""Pure-NumPy GRU layer kernels (fallback when the compiled extension is absent).

Semantics match temporalvqa._gru_ext; either backend must pass the same
finite-difference and golden tests. One GRU step computes

    reset  = sigmoid(Wxr x + Whr h)
    update = sigmoid(Wxz x + Whz h)
    cand   = tanh(Wxh x + Whh (reset*h))
    h'     = (1-update)*h + update*cand

with no bias terms.
"""

from __future__ import annotations

import numpy as np


def _sigmoid(a):
    return 1.0 / (1.0 + np.exp(-a))


def layer_forward(wxr, whr, wxz, whz, wxh, whh, x_seq, h0):
    """Run one GRU layer over x_seq (T, Din) from h0 (H,).

    Returns (h_seq, reset, update, cand), each (T, H).
    """
    t_len = x_seq.shape[0]
    hidden = h0.shape[0]
    h_seq = np.empty((t_len, hidden))
    reset = np.empty((t_len, hidden))
    update = np.empty((t_len, hidden))
    cand = np.empty((t_len, hidden))
    h = h0
    for t in range(t_len):
        x = x_seq[t]
        r = _sigmoid(wxr @ x + whr @ h)
        z = _sigmoid(wxz @ x + whz @ h)
        c = np.tanh(wxh @ x + whh @ (r * h))
        h = (1.0 - z) * h + z * c
        reset[t] = r
        update[t] = z
        cand[t] = c
        h_seq[t] = h
    return h_seq, reset, update, cand


def layer_backward(wxr, whr, wxz, whz, wxh, whh, x_seq, h0, h_seq, reset, update, cand,
                   d_h, d_h_last):
    """Reverse-mode pass for layer_forward.

    d_h is (T, H): the loss gradient on each step's hidden state; d_h_last
    (H,) is an extra gradient on the final state (used when a decoder was
    seeded from it). Returns (dx_seq, dh0, dwxr, dwhr, dwxz, dwhz, dwxh, dwhh).
    """
    t_len, din = x_seq.shape
    hidden = h0.shape[0]
    dx_seq = np.zeros((t_len, din))
    dwxr = np.zeros_like(wxr)
    dwhr = np.zeros_like(whr)
    dwxz = np.zeros_like(wxz)
    dwhz = np.zeros_like(whz)
    dwxh = np.zeros_like(wxh)
    dwhh = np.zeros_like(whh)
    carry = d_h_last.copy()
    for t in range(t_len - 1, -1, -1):
        dh = d_h[t] + carry
        x = x_seq[t]
        h_prev = h_seq[t - 1] if t > 0 else h0
        r = reset[t]
        z = update[t]
        c = cand[t]
        dz = dh * (c - h_prev)
        dc = dh * z
        dh_prev = dh * (1.0 - z)
        # tanh candidate path
        da_c = dc * (1.0 - c * c)
        gated = r * h_prev
        dwxh += np.outer(da_c, x)
        dwhh += np.outer(da_c, gated)
        dx = wxh.T @ da_c
        d_gated = whh.T @ da_c
        dr = d_gated * h_prev
        dh_prev += d_gated * r
        # update gate path
        da_z = dz * z * (1.0 - z)
        dwxz += np.outer(da_z, x)
        dwhz += np.outer(da_z, h_prev)
        dx += wxz.T @ da_z
        dh_prev += whz.T @ da_z
        # reset gate path
        da_r = dr * r * (1.0 - r)
        dwxr += np.outer(da_r, x)
        dwhr += np.outer(da_r, h_prev)
        dx += wxr.T @ da_r
        dh_prev += whr.T @ da_r
        dx_seq[t] = dx
        carry = dh_prev
    return dx_seq, carry, dwxr, dwhr, dwxz, dwhz, dwxh, dwhh
