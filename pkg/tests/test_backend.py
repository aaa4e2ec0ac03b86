import os
import subprocess
import sys

import numpy as np
import pytest

from temporalvqa import backend
from temporalvqa import _gru_numpy


def _random_layer(rng, t_len=4, din=3, hidden=5):
    ws = [np.ascontiguousarray(rng.uniform(-0.5, 0.5, s))
          for s in [(hidden, din), (hidden, hidden)] * 3]
    x = np.ascontiguousarray(rng.uniform(-1, 1, (t_len, din)))
    h0 = np.ascontiguousarray(rng.uniform(-0.5, 0.5, hidden))
    return ws, x, h0


def test_backend_reports_a_known_kind():
    assert backend.BACKEND in ("ext", "numpy")


def test_extension_matches_numpy_fallback():
    ext = pytest.importorskip("temporalvqa._gru_ext")
    rng = np.random.default_rng(0)
    ws, x, h0 = _random_layer(rng)
    out_np = _gru_numpy.layer_forward(*ws, x, h0)
    out_ext = ext.layer_forward(*ws, x, h0)
    for a, b in zip(out_np, out_ext):
        assert np.allclose(a, b, atol=1e-13)

    d_h = np.ascontiguousarray(rng.uniform(-1, 1, out_np[0].shape))
    d_last = np.ascontiguousarray(rng.uniform(-1, 1, h0.shape))
    back_np = _gru_numpy.layer_backward(*ws, x, h0, *out_np, d_h, d_last)
    back_ext = ext.layer_backward(*ws, x, h0, *out_ext, d_h, d_last)
    for a, b in zip(back_np, back_ext):
        assert np.allclose(a, b, atol=1e-13)


def test_env_override_selects_numpy():
    env = dict(os.environ, VQA_BACKEND="py")
    out = subprocess.run(
        [sys.executable, "-c", "from temporalvqa import backend; print(backend.BACKEND)"],
        env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
