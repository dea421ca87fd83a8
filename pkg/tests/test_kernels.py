"""Kernel backends: numpy reference vs compiled core, selection logic."""

import os
import subprocess
import sys

import numpy as np
import pytest

from rumornet._kernels import pyref

try:
    from rumornet._kernels import _core
    HAVE_CYTHON = True
except ImportError:
    _core = None
    HAVE_CYTHON = False

needs_cython = pytest.mark.skipif(not HAVE_CYTHON,
                                  reason="compiled extension not built")


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def random_lstm(rng, p=7, hidden=5):
    xw = rng.normal(scale=0.7, size=(p, 4 * hidden))
    w_rec = rng.normal(scale=0.4, size=(hidden, 4 * hidden))
    return np.ascontiguousarray(xw), np.ascontiguousarray(w_rec)


def random_conv(rng, a=6, b=7, depth=4, m=3):
    cube = rng.normal(size=(a, b, depth))
    filters = rng.normal(scale=0.5, size=(m, 3, 3, depth))
    biases = rng.normal(scale=0.2, size=m)
    return (np.ascontiguousarray(cube), np.ascontiguousarray(filters),
            np.ascontiguousarray(biases))


class TestReferenceLstm:
    def test_single_step_gate_layout(self):
        # zero recurrence isolates the input contribution; pins the
        # [input|forget|output|candidate] block order, post-activation
        rng = np.random.default_rng(0)
        hidden = 3
        xw = rng.normal(size=(1, 4 * hidden))
        w_rec = np.zeros((hidden, 4 * hidden))
        h, c, gates = pyref.lstm_forward(xw, w_rec)

        gi = sigmoid(xw[0, :hidden])
        gf = sigmoid(xw[0, hidden:2 * hidden])
        go = sigmoid(xw[0, 2 * hidden:3 * hidden])
        gc = np.tanh(xw[0, 3 * hidden:])
        np.testing.assert_allclose(gates[0], np.concatenate([gi, gf, go, gc]),
                                   atol=1e-15)
        np.testing.assert_allclose(c[0], gi * gc, atol=1e-15)
        np.testing.assert_allclose(h[0], go * np.tanh(gi * gc), atol=1e-15)

    def test_forget_gate_carries_cell_state(self):
        # second step with zero input: c2 = sigmoid(0)*c1 + sigmoid(0)*tanh(0)
        hidden = 2
        xw = np.zeros((2, 4 * hidden))
        xw[0, :] = 1.0  # step 1 builds nonzero state
        w_rec = np.zeros((hidden, 4 * hidden))
        h, c, gates = pyref.lstm_forward(xw, w_rec)
        np.testing.assert_allclose(c[1], 0.5 * c[0], atol=1e-15)

    def test_backward_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        xw, w_rec = random_lstm(rng, p=5, hidden=3)
        r = rng.normal(size=(5, 3))

        def loss(xw_, w_rec_):
            h, _, _ = pyref.lstm_forward(xw_, w_rec_)
            return float(np.sum(r * h))

        h, c, gates = pyref.lstm_forward(xw, w_rec)
        dxw, dw_rec = pyref.lstm_backward(np.ascontiguousarray(r), h, c,
                                          gates, w_rec)
        eps = 1e-6
        for arr, grad in ((xw, dxw), (w_rec, dw_rec)):
            flat = arr.ravel()
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + eps
                up = loss(xw, w_rec)
                flat[i] = orig - eps
                down = loss(xw, w_rec)
                flat[i] = orig
                fd = (up - down) / (2 * eps)
                assert grad.ravel()[i] == pytest.approx(fd, abs=1e-7)


class TestReferenceConv:
    def test_all_ones_hand_value(self):
        cube = np.ones((3, 3, 2))
        filters = np.ones((1, 3, 3, 2))
        out = pyref.conv3x3_forward(cube, filters, np.zeros(1))
        assert out.shape == (1, 1, 1)
        assert out[0, 0, 0] == 18.0

    def test_relu_clamps_negative_response(self):
        cube = np.ones((3, 3, 2))
        filters = np.ones((1, 3, 3, 2))
        out = pyref.conv3x3_forward(cube, filters, np.array([-20.0]))
        assert out[0, 0, 0] == 0.0

    def test_backward_skips_inactive_cells(self):
        rng = np.random.default_rng(2)
        cube, filters, _ = random_conv(rng, a=5, b=5, depth=3, m=2)
        biases = np.full(2, -1e3)  # drives every response below zero
        out = pyref.conv3x3_forward(cube, filters, biases)
        assert np.all(out == 0.0)
        dout = np.ones_like(out)
        dcube, dfilters, dbiases = pyref.conv3x3_backward(dout, out, cube,
                                                          filters)
        assert np.all(dcube == 0.0)
        assert np.all(dfilters == 0.0)
        assert np.all(dbiases == 0.0)

    def test_backward_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        cube, filters, biases = random_conv(rng, a=5, b=6, depth=2, m=2)
        r = rng.normal(size=(2, 3, 4))

        def loss():
            return float(np.sum(r * pyref.conv3x3_forward(cube, filters,
                                                          biases)))

        out = pyref.conv3x3_forward(cube, filters, biases)
        dcube, dfilters, dbiases = pyref.conv3x3_backward(
            np.ascontiguousarray(r), out, cube, filters)
        eps = 1e-6
        for arr, grad in ((cube, dcube), (filters, dfilters)):
            flat = arr.ravel()
            gflat = grad.ravel()
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + eps
                up = loss()
                flat[i] = orig - eps
                down = loss()
                flat[i] = orig
                assert gflat[i] == pytest.approx((up - down) / (2 * eps),
                                                 abs=1e-7)
        for j in range(biases.size):
            orig = biases[j]
            biases[j] = orig + eps
            up = loss()
            biases[j] = orig - eps
            down = loss()
            biases[j] = orig
            assert dbiases[j] == pytest.approx((up - down) / (2 * eps),
                                               abs=1e-7)


@needs_cython
class TestBackendParity:
    @pytest.mark.parametrize("p,hidden", [(1, 1), (4, 3), (9, 6), (20, 8)])
    def test_lstm_forward(self, p, hidden):
        rng = np.random.default_rng(p * 100 + hidden)
        xw, w_rec = random_lstm(rng, p, hidden)
        for a, b in zip(_core.lstm_forward(xw, w_rec),
                        pyref.lstm_forward(xw, w_rec)):
            np.testing.assert_allclose(np.asarray(a), b, atol=1e-13)

    @pytest.mark.parametrize("p,hidden", [(4, 3), (9, 6), (20, 8)])
    def test_lstm_backward(self, p, hidden):
        rng = np.random.default_rng(p * 7 + hidden)
        xw, w_rec = random_lstm(rng, p, hidden)
        dh = np.ascontiguousarray(rng.normal(size=(p, hidden)))
        h, c, gates = pyref.lstm_forward(xw, w_rec)
        got = _core.lstm_backward(dh, h, c, gates, w_rec)
        want = pyref.lstm_backward(dh, h, c, gates, w_rec)
        for a, b in zip(got, want):
            np.testing.assert_allclose(np.asarray(a), b, atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_conv_forward(self, seed):
        rng = np.random.default_rng(seed)
        a, b = int(rng.integers(3, 9)), int(rng.integers(3, 9))
        depth, m = int(rng.integers(1, 6)), int(rng.integers(1, 5))
        cube, filters, biases = random_conv(rng, a, b, depth, m)
        np.testing.assert_allclose(
            np.asarray(_core.conv3x3_forward(cube, filters, biases)),
            pyref.conv3x3_forward(cube, filters, biases), atol=1e-13)

    @pytest.mark.parametrize("seed", range(5))
    def test_conv_backward(self, seed):
        rng = np.random.default_rng(seed + 50)
        a, b = int(rng.integers(3, 9)), int(rng.integers(3, 9))
        depth, m = int(rng.integers(1, 6)), int(rng.integers(1, 5))
        cube, filters, biases = random_conv(rng, a, b, depth, m)
        out = pyref.conv3x3_forward(cube, filters, biases)
        dout = np.ascontiguousarray(np.random.default_rng(seed).normal(
            size=out.shape))
        got = _core.conv3x3_backward(dout, out, cube, filters)
        want = pyref.conv3x3_backward(dout, out, cube, filters)
        for g, w in zip(got, want):
            np.testing.assert_allclose(np.asarray(g), w, atol=1e-12)


class TestBackendSelection:
    def run_probe(self, value):
        env = dict(os.environ)
        if value is None:
            env.pop("RUMORNET_KERNELS", None)
        else:
            env["RUMORNET_KERNELS"] = value
        return subprocess.run(
            [sys.executable, "-c",
             "import rumornet._kernels as k; print(k.BACKEND)"],
            capture_output=True, text=True, env=env)

    def test_python_forces_numpy_backend(self):
        probe = self.run_probe("python")
        assert probe.returncode == 0
        assert probe.stdout.strip() == "numpy"

    def test_invalid_value_rejected(self):
        probe = self.run_probe("fortran")
        assert probe.returncode != 0
        assert "RUMORNET_KERNELS" in probe.stderr

    def test_auto_picks_some_backend(self):
        probe = self.run_probe(None)
        assert probe.returncode == 0
        assert probe.stdout.strip() in ("cython", "numpy")

    def test_cython_request(self):
        probe = self.run_probe("cython")
        if HAVE_CYTHON:
            assert probe.returncode == 0
            assert probe.stdout.strip() == "cython"
        else:
            assert probe.returncode != 0

    def test_exported_names_bound_to_selected_backend(self):
        import rumornet._kernels as k
        assert k.BACKEND in ("cython", "numpy")
        src = _core if (HAVE_CYTHON and k.BACKEND == "cython") else pyref
        assert k.lstm_forward is src.lstm_forward
        assert k.conv3x3_backward is src.conv3x3_backward
