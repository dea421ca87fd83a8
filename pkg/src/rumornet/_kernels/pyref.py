"""Pure numpy reference kernels.

Same contracts as the compiled core in ``_core.pyx``; used as the fallback
when the extension is unavailable and as the slow-but-simple half of the
kernel benchmark.  Shapes are validated by the callers in
:mod:`rumornet.ops`, not here.

LSTM gate layout: the 4H-wide axis holds the blocks
``[input | forget | output | candidate]``, post-activation in the returned
``gates`` array.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

BACKEND = "numpy"


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # Split by sign to avoid exp overflow for large |x|.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def lstm_forward(xw: np.ndarray, w_rec: np.ndarray):
    """Run the cell recurrence over a sequence.

    ``xw`` is the precomputed input contribution x @ W_in + bias, shape
    (p, 4H); ``w_rec`` maps the previous hidden state to the gate
    pre-activations, shape (H, 4H).  Initial hidden and cell states are
    zero.  Returns (h, c, gates) with shapes (p, H), (p, H), (p, 4H).
    """
    p, h4 = xw.shape
    hidden = h4 // 4
    h = np.empty((p, hidden))
    c = np.empty((p, hidden))
    gates = np.empty((p, h4))
    h_prev = np.zeros(hidden)
    c_prev = np.zeros(hidden)
    for t in range(p):
        s = xw[t] + h_prev @ w_rec
        gi = _sigmoid(s[:hidden])
        gf = _sigmoid(s[hidden : 2 * hidden])
        go = _sigmoid(s[2 * hidden : 3 * hidden])
        gc = np.tanh(s[3 * hidden :])
        c_t = gf * c_prev + gi * gc
        h_t = go * np.tanh(c_t)
        gates[t, :hidden] = gi
        gates[t, hidden : 2 * hidden] = gf
        gates[t, 2 * hidden : 3 * hidden] = go
        gates[t, 3 * hidden :] = gc
        c[t] = c_t
        h[t] = h_t
        h_prev = h_t
        c_prev = c_t
    return h, c, gates


def lstm_backward(dh_out: np.ndarray, h: np.ndarray, c: np.ndarray, gates: np.ndarray, w_rec: np.ndarray):
    """Backpropagate through :func:`lstm_forward`.

    ``dh_out`` is d(loss)/d(h) per step.  Returns (dxw, dw_rec); the caller
    maps dxw back onto the input sequence, input weights, and bias.
    """
    p, hidden = h.shape
    dxw = np.empty((p, 4 * hidden))
    dw_rec = np.zeros_like(w_rec)
    dh_next = np.zeros(hidden)
    dc_next = np.zeros(hidden)
    for t in range(p - 1, -1, -1):
        gi = gates[t, :hidden]
        gf = gates[t, hidden : 2 * hidden]
        go = gates[t, 2 * hidden : 3 * hidden]
        gc = gates[t, 3 * hidden :]
        tc = np.tanh(c[t])
        dh = dh_out[t] + dh_next
        dgo = dh * tc
        dc = dh * go * (1.0 - tc * tc) + dc_next
        c_prev = c[t - 1] if t > 0 else 0.0
        dgi = dc * gc
        dgf = dc * c_prev
        dgc = dc * gi
        dc_next = dc * gf
        ds = dxw[t]
        ds[:hidden] = dgi * gi * (1.0 - gi)
        ds[hidden : 2 * hidden] = dgf * gf * (1.0 - gf)
        ds[2 * hidden : 3 * hidden] = dgo * go * (1.0 - go)
        ds[3 * hidden :] = dgc * (1.0 - gc * gc)
        if t > 0:
            dw_rec += np.outer(h[t - 1], ds)
        dh_next = ds @ w_rec.T
    return dxw, dw_rec


def conv3x3_forward(cube: np.ndarray, filters: np.ndarray, biases: np.ndarray) -> np.ndarray:
    """ReLU(3x3xC valid convolution + bias) of (A,B,C) cube, (M,3,3,C) filters."""
    depth = cube.shape[2]
    win = sliding_window_view(cube, (3, 3), axis=(0, 1))  # (A-2, B-2, C, 3, 3)
    pre = np.tensordot(win, filters, axes=((3, 4, 2), (1, 2, 3)))  # (A-2, B-2, M)
    out = np.transpose(pre, (2, 0, 1)) + biases[:, None, None]
    np.maximum(out, 0.0, out=out)
    return np.ascontiguousarray(out)


def conv3x3_backward(dout: np.ndarray, out: np.ndarray, cube: np.ndarray, filters: np.ndarray):
    """Backward for conv3x3_forward; returns (dcube, dfilters, dbiases)."""
    rows, cols = dout.shape[1], dout.shape[2]
    dpre = np.where(out > 0.0, dout, 0.0)
    dbiases = dpre.sum(axis=(1, 2))
    win = sliding_window_view(cube, (3, 3), axis=(0, 1))
    # (M, C, 3, 3) then back to the (M, 3, 3, C) filter layout.
    dfilters = np.tensordot(dpre, win, axes=((1, 2), (0, 1))).transpose(0, 2, 3, 1)
    dcube = np.zeros_like(cube)
    for i in range(3):
        for j in range(3):
            dcube[i : i + rows, j : j + cols, :] += np.tensordot(dpre, filters[:, i, j, :], axes=(0, 0))
    return dcube, np.ascontiguousarray(dfilters), dbiases
