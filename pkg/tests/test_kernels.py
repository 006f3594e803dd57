import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gpsemi import _kernels_py, kernels

compiled = pytest.importorskip("gpsemi._kernels")


@given(st.integers(0, 30), st.lists(st.floats(-6, 6), min_size=1, max_size=20))
def test_hermite_backends_agree(n, x):
    x = np.array(x)
    np.testing.assert_allclose(compiled.hermite_eval(n, x), _kernels_py.hermite_eval(n, x), rtol=1e-13, atol=1e-300)


@given(st.lists(st.tuples(st.floats(-900, 900), st.floats(-50, 50), st.floats(0, 3), st.floats(-3, 3)),
                min_size=1, max_size=20))
def test_envelope_backends_agree(rows):
    sig, ph, wr, wi = (np.array(c) for c in zip(*rows))
    w = wr + 1j * wi
    a = compiled.sech_envelope(1.7, ph, sig, w)
    b = _kernels_py.sech_envelope(1.7, ph, sig, w)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-300)
    assert np.all(np.isfinite(a))


def test_envelope_zero_weight():
    out = kernels.sech_envelope(1.0, np.zeros(2), np.zeros(2), np.array([0j, 1 + 0j]))
    assert out[0] == 0 and out[1] == pytest.approx(1.0)


def test_quadrature_backends_agree():
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=17), np.linspace(-4, 4, 101)
    w = np.full(101, 0.08)
    phi = rng.normal(size=101) + 1j * rng.normal(size=101)
    np.testing.assert_allclose(compiled.chirp_quadrature_1d(x, y, w, phi, 0.7, 1.3),
                               _kernels_py.chirp_quadrature_1d(x, y, w, phi, 0.7, 1.3), rtol=1e-12)
    y3 = np.linspace(-3, 3, 41)
    w3 = np.full(41, 0.15)
    phi2 = rng.normal(size=(101, 41)) + 0j
    x3 = rng.normal(size=17)
    np.testing.assert_allclose(
        compiled.chirp_quadrature_2d(x, x3, y, y3, w, w3, phi2, 0.7, 1.3, -0.2, 0.9),
        _kernels_py.chirp_quadrature_2d(x, x3, y, y3, w, w3, phi2, 0.7, 1.3, -0.2, 0.9), rtol=1e-11)


def test_pure_python_switch():
    env = dict(os.environ, GPSEMI_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import gpsemi; print(gpsemi.BACKEND)"], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert kernels.BACKEND == "compiled"
