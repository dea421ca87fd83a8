"""Differentiable building blocks recorded on a Tape.

Every op takes Tensors plus the tape, computes the forward value eagerly
with numpy, and records a closure that accumulates into ``.grad`` of any
input that has a gradient buffer.  Tensors without one (constants) are
skipped, which is how frozen rows and fixed coefficient vectors opt out.
"""

import numpy as np

from . import _kernels
from .errors import ConfigError, DataError, ShapeError
from .tensor import Tensor


def _out(data):
    t = Tensor(data)
    t.ensure_grad()
    return t


def matmul(a, b, tape):
    """Matrix product with numpy 1-D/2-D semantics (all four combos)."""
    ad, bd = a.data, b.data
    if ad.ndim not in (1, 2) or bd.ndim not in (1, 2):
        raise ShapeError("matmul expects 1-D or 2-D operands, got %s @ %s"
                         % (ad.shape, bd.shape))
    if ad.shape[-1] != bd.shape[0]:
        raise ShapeError("matmul inner dimensions disagree: %s @ %s"
                         % (ad.shape, bd.shape))
    out = _out(ad @ bd)

    def back():
        g = out.grad
        if a.grad is not None:
            if ad.ndim == 2 and bd.ndim == 2:
                a.grad += g @ bd.T
            elif ad.ndim == 1 and bd.ndim == 2:
                a.grad += bd @ g
            elif ad.ndim == 2 and bd.ndim == 1:
                a.grad += np.outer(g, bd)
            else:
                a.grad += g * bd
        if b.grad is not None:
            if ad.ndim == 2 and bd.ndim == 2:
                b.grad += ad.T @ g
            elif ad.ndim == 1 and bd.ndim == 2:
                b.grad += np.outer(ad, g)
            elif ad.ndim == 2 and bd.ndim == 1:
                b.grad += ad.T @ g
            else:
                b.grad += g * ad

    tape.record(back)
    return out


def add(a, b, tape):
    if a.shape != b.shape:
        raise ShapeError("add expects matching shapes, got %s + %s"
                         % (a.shape, b.shape))
    out = _out(a.data + b.data)

    def back():
        if a.grad is not None:
            a.grad += out.grad
        if b.grad is not None:
            b.grad += out.grad

    tape.record(back)
    return out


def add_bias(mat, vec, tape):
    """Row-broadcast add: (m,n) + (n,) -> (m,n)."""
    if mat.data.ndim != 2 or vec.shape != (mat.shape[1],):
        raise ShapeError("add_bias expects (m,n) and (n,), got %s and %s"
                         % (mat.shape, vec.shape))
    out = _out(mat.data + vec.data)

    def back():
        if mat.grad is not None:
            mat.grad += out.grad
        if vec.grad is not None:
            vec.grad += out.grad.sum(axis=0)

    tape.record(back)
    return out


def activation(x, kind, tape):
    if kind == "tanh":
        y = np.tanh(x.data)
    elif kind == "sigmoid":
        xd = x.data
        y = np.empty_like(xd)
        pos = xd >= 0
        y[pos] = 1.0 / (1.0 + np.exp(-xd[pos]))
        ex = np.exp(xd[~pos])
        y[~pos] = ex / (1.0 + ex)
    elif kind == "relu":
        y = np.maximum(x.data, 0.0)
    else:
        raise ValueError("unknown activation kind %r" % kind)
    out = _out(y)

    def back():
        if x.grad is None:
            return
        if kind == "tanh":
            x.grad += out.grad * (1.0 - out.data * out.data)
        elif kind == "sigmoid":
            x.grad += out.grad * out.data * (1.0 - out.data)
        else:
            x.grad += out.grad * (x.data > 0.0)

    tape.record(back)
    return out


def masked_softmax(logits, mask, tape):
    """Softmax over positions where mask is True; zeros elsewhere.

    An all-false mask yields the zero vector (no probability mass), not an
    error: empty intervals produce no attention.
    """
    if logits.data.ndim != 1 or mask.shape != logits.shape:
        raise ShapeError("masked_softmax expects matching 1-D logits/mask, "
                         "got %s and %s" % (logits.shape, mask.shape))
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return _out(np.zeros_like(logits.data))
    shifted = logits.data - logits.data[mask].max()
    e = np.where(mask, np.exp(shifted), 0.0)
    alpha = e / e.sum()
    out = _out(alpha)

    def back():
        if logits.grad is None:
            return
        g = out.grad
        # alpha is zero at masked slots, so the Jacobian row vanishes there
        logits.grad += alpha * (g - g @ alpha)

    tape.record(back)
    return out


def dropout(x, rate, rng, training, tape):
    """Inverted dropout; identity when rate is 0 or not training."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError("dropout rate must be in [0, 1), got %r" % rate)
    if rate == 0.0 or not training:
        return x
    keep = rng.random(x.shape) >= rate
    scale = 1.0 / (1.0 - rate)
    out = _out(x.data * keep * scale)

    def back():
        if x.grad is not None:
            x.grad += out.grad * keep * scale

    tape.record(back)
    return out


def embedding_rows(table, indices, keep, tape):
    """Gather table rows; positions where keep is False emit exact zeros.

    Dropped positions receive no gradient, so a frozen zero row stays a
    frozen zero row no matter how often its index appears.
    """
    indices = np.asarray(indices, dtype=np.int64)
    keep = np.asarray(keep, dtype=bool)
    if indices.ndim != 1 or keep.shape != indices.shape:
        raise ShapeError("embedding_rows expects matching 1-D indices/keep, "
                         "got %s and %s" % (indices.shape, keep.shape))
    n_rows = table.shape[0]
    if ((indices < 0) | (indices >= n_rows)).any():
        bad = indices[(indices < 0) | (indices >= n_rows)][0]
        raise DataError("embedding index %d out of range for table with %d "
                        "rows" % (bad, n_rows))
    gathered = table.data[indices]
    gathered[~keep] = 0.0
    out = _out(gathered)

    def back():
        if table.grad is None:
            return
        g = out.grad
        np.add.at(table.grad, indices[keep], g[keep])

    tape.record(back)
    return out


def repeat_rows(v, n_real, n_total, tape):
    """Tile a vector across the first n_real rows of an (n_total, d) matrix.

    Remaining rows are zero; they correspond to padded tweet slots.
    """
    if v.data.ndim != 1:
        raise ShapeError("repeat_rows expects a vector, got %s" % (v.shape,))
    if not 0 <= n_real <= n_total:
        raise ShapeError("repeat_rows needs 0 <= n_real <= n_total, got "
                         "%d and %d" % (n_real, n_total))
    data = np.zeros((n_total, v.shape[0]))
    data[:n_real] = v.data
    out = _out(data)

    def back():
        if v.grad is not None and n_real > 0:
            v.grad += out.grad[:n_real].sum(axis=0)

    tape.record(back)
    return out


def concat_cols(a, b, tape):
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[0] != b.shape[0]:
        raise ShapeError("concat_cols expects 2-D with equal row counts, "
                         "got %s and %s" % (a.shape, b.shape))
    out = _out(np.concatenate([a.data, b.data], axis=1))
    split = a.shape[1]

    def back():
        if a.grad is not None:
            a.grad += out.grad[:, :split]
        if b.grad is not None:
            b.grad += out.grad[:, split:]

    tape.record(back)
    return out


def stack_mats(mats, tape):
    """Stack k equal-shape matrices into a (k, q, w) block."""
    if not mats:
        raise ShapeError("stack_mats needs at least one matrix")
    shape = mats[0].shape
    for m in mats:
        if m.shape != shape:
            raise ShapeError("stack_mats expects equal shapes, got %s and %s"
                             % (shape, m.shape))
    out = _out(np.stack([m.data for m in mats], axis=0))

    def back():
        for i, m in enumerate(mats):
            if m.grad is not None:
                m.grad += out.grad[i]

    tape.record(back)
    return out


def lstm_sequence(x, w_in, w_rec, bias, reverse, tape):
    """Full LSTM pass over a (p, Dw) sequence, returning (p, H) states.

    Gate blocks along the 4H axis are ordered input|forget|output|candidate.
    ``reverse`` runs the recurrence right-to-left and returns states in the
    original time order.  Initial hidden and cell states are zero.
    """
    p = x.shape[0]
    h4 = w_in.shape[1]
    hidden = h4 // 4
    if w_in.shape != (x.shape[1], h4) or w_rec.shape != (hidden, h4) \
            or bias.shape != (h4,) or 4 * hidden != h4:
        raise ShapeError("lstm_sequence got inconsistent shapes x=%s w_in=%s "
                         "w_rec=%s bias=%s"
                         % (x.shape, w_in.shape, w_rec.shape, bias.shape))
    xs = x.data[::-1] if reverse else x.data
    xw = xs @ w_in.data + bias.data
    h, c, gates = _kernels.lstm_forward(xw, w_rec.data)
    out = _out(h[::-1] if reverse else h)

    def back():
        g = np.ascontiguousarray(out.grad[::-1] if reverse else out.grad)
        dxw, dw_rec = _kernels.lstm_backward(g, h, c, gates, w_rec.data)
        if w_rec.grad is not None:
            w_rec.grad += dw_rec
        if w_in.grad is not None:
            w_in.grad += xs.T @ dxw
        if bias.grad is not None:
            bias.grad += dxw.sum(axis=0)
        if x.grad is not None:
            dxs = dxw @ w_in.data.T
            x.grad += dxs[::-1] if reverse else dxs

    tape.record(back)
    return out


def conv_valid(cube, filters, biases, tape):
    """Valid 3x3xC convolution with ReLU, one feature map per filter."""
    cd, fd = cube.data, filters.data
    if cd.ndim != 3 or fd.ndim != 4 or fd.shape[1:3] != (3, 3):
        raise ShapeError("conv_valid expects cube (A,B,C) and filters "
                         "(M,3,3,C), got %s and %s" % (cube.shape, filters.shape))
    if cd.shape[0] < 3 or cd.shape[1] < 3:
        raise ShapeError("conv_valid needs spatial dims >= 3, got cube %s"
                         % (cube.shape,))
    if fd.shape[3] != cd.shape[2]:
        raise ShapeError("filter depth %d does not match cube depth %d"
                         % (fd.shape[3], cd.shape[2]))
    if biases.shape != (fd.shape[0],):
        raise ShapeError("conv_valid expects %d biases, got shape %s"
                         % (fd.shape[0], biases.shape))
    out = _out(_kernels.conv3x3_forward(cd, fd, biases.data))

    def back():
        dcube, dfilt, dbias = _kernels.conv3x3_backward(
            np.ascontiguousarray(out.grad), out.data, cd, fd)
        if cube.grad is not None:
            cube.grad += dcube
        if filters.grad is not None:
            filters.grad += dfilt
        if biases.grad is not None:
            biases.grad += dbias

    tape.record(back)
    return out


def global_max_pool(maps, tape):
    """Per-map global max over (M, R, C); ties go to the first row-major cell."""
    md = maps.data
    if md.ndim != 3:
        raise ShapeError("global_max_pool expects (M,R,C), got %s"
                         % (maps.shape,))
    m = md.shape[0]
    flat = md.reshape(m, -1)
    arg = flat.argmax(axis=1)
    out = _out(flat[np.arange(m), arg])

    def back():
        if maps.grad is None:
            return
        gflat = maps.grad.reshape(m, -1)
        gflat[np.arange(m), arg] += out.grad

    tape.record(back)
    return out


def bce_loss(y, target, tape):
    """Binary cross-entropy of a probability against a 0/1 target.

    The probability is clamped to [1e-12, 1 - 1e-12] before the logs so a
    saturated sigmoid cannot produce inf; the gradient uses the clamped
    value.
    """
    if y.size != 1:
        raise ShapeError("bce_loss expects a scalar probability, got shape %s"
                         % (y.shape,))
    t = float(target)
    yc = float(np.clip(y.data, 1e-12, 1.0 - 1e-12).item())
    loss = -(t * np.log(yc) + (1.0 - t) * np.log(1.0 - yc))
    out = _out(np.asarray(loss))

    def back():
        if y.grad is not None:
            y.grad += out.grad * (yc - t) / (yc * (1.0 - yc))

    tape.record(back)
    return out
