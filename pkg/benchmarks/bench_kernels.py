"""Timing comparison of the compiled and pure-numpy kernel backends.

Runs each hot kernel on a small (test-sized) and a large (default-config
sized) problem, reporting the best-of-N wall time per call and the speedup
of the compiled core over the numpy reference.  Also cross-checks that
both backends agree numerically on every instance it times.

Usage:
    python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import sys
import time

import numpy as np

from rumornet._kernels import pyref

try:
    from rumornet._kernels import _core
except ImportError:
    _core = None

# (label, p, hidden) for the LSTM; (label, side_a, side_b, depth, filters)
# for the convolution.  "large" mirrors the default model configuration:
# 2500-word intervals at H=50, and a 50x40x200 event cube under 32 filters.
LSTM_SIZES = [
    ("small", 60, 8),
    ("large", 2500, 50),
]
CONV_SIZES = [
    ("small", 5, 12, 48, 8),
    ("large", 50, 40, 200, 32),
]


def best_of(fn, repeats):
    fn()  # warm up caches and allocator
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def max_diff(a, b):
    return max(float(np.max(np.abs(np.asarray(x) - np.asarray(y))))
               for x, y in zip(a, b))


def bench_lstm(rng, label, p, hidden, repeats, rows):
    xw = rng.uniform(-1, 1, size=(p, 4 * hidden))
    w_rec = rng.uniform(-0.5, 0.5, size=(hidden, 4 * hidden))
    ref_fwd = pyref.lstm_forward(xw, w_rec)
    core_fwd = _core.lstm_forward(xw, w_rec)
    dh = rng.uniform(-1, 1, size=(p, hidden))
    ref_bwd = pyref.lstm_backward(dh, *ref_fwd[:2], ref_fwd[2], w_rec)
    core_bwd = _core.lstm_backward(dh, *core_fwd[:2], core_fwd[2], w_rec)
    fwd_diff = max_diff(ref_fwd, core_fwd)
    bwd_diff = max_diff(ref_bwd, core_bwd)
    t_ref = best_of(lambda: pyref.lstm_forward(xw, w_rec), repeats)
    t_core = best_of(lambda: _core.lstm_forward(xw, w_rec), repeats)
    rows.append(("lstm_forward/%s" % label, t_ref, t_core, fwd_diff))
    t_ref = best_of(lambda: pyref.lstm_backward(dh, *ref_fwd[:2],
                                                ref_fwd[2], w_rec), repeats)
    t_core = best_of(lambda: _core.lstm_backward(dh, *core_fwd[:2],
                                                 core_fwd[2], w_rec), repeats)
    rows.append(("lstm_backward/%s" % label, t_ref, t_core, bwd_diff))


def bench_conv(rng, label, a, b, depth, filters, repeats, rows):
    cube = rng.uniform(-1, 1, size=(a, b, depth))
    filt = rng.uniform(-0.5, 0.5, size=(filters, 3, 3, depth))
    bias = rng.uniform(-0.5, 0.5, size=filters)
    ref_out = pyref.conv3x3_forward(cube, filt, bias)
    core_out = np.asarray(_core.conv3x3_forward(cube, filt, bias))
    dout = rng.uniform(-1, 1, size=ref_out.shape)
    ref_bwd = pyref.conv3x3_backward(dout, ref_out, cube, filt)
    core_bwd = _core.conv3x3_backward(dout, core_out, cube, filt)
    fwd_diff = float(np.max(np.abs(ref_out - core_out)))
    bwd_diff = max_diff(ref_bwd, core_bwd)
    t_ref = best_of(lambda: pyref.conv3x3_forward(cube, filt, bias), repeats)
    t_core = best_of(lambda: _core.conv3x3_forward(cube, filt, bias), repeats)
    rows.append(("conv_forward/%s" % label, t_ref, t_core, fwd_diff))
    t_ref = best_of(lambda: pyref.conv3x3_backward(dout, ref_out, cube, filt),
                    repeats)
    t_core = best_of(lambda: _core.conv3x3_backward(dout, core_out, cube,
                                                    filt), repeats)
    rows.append(("conv_backward/%s" % label, t_ref, t_core, bwd_diff))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repetitions per kernel (best is kept)")
    args = parser.parse_args(argv)
    if _core is None:
        print("compiled extension not built; nothing to compare "
              "(pip install -e . builds it)", file=sys.stderr)
        return 1
    rng = np.random.default_rng(0)
    rows = []
    for label, p, hidden in LSTM_SIZES:
        bench_lstm(rng, label, p, hidden, args.repeats, rows)
    for label, a, b, depth, filters in CONV_SIZES:
        bench_conv(rng, label, a, b, depth, filters, args.repeats, rows)
    name_w = max(len(r[0]) for r in rows)
    print("%-*s  %10s  %10s  %8s  %s"
          % (name_w, "kernel", "numpy ms", "cython ms", "speedup",
             "max|diff|"))
    for name, t_ref, t_core, diff in rows:
        print("%-*s  %10.3f  %10.3f  %7.1fx  %.1e"
              % (name_w, name, t_ref * 1e3, t_core * 1e3,
                 t_ref / t_core, diff))
    return 0


if __name__ == "__main__":
    sys.exit(main())
