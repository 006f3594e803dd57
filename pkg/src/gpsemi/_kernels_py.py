"""NumPy implementations of the hot kernels.

These mirror ``_kernels.pyx`` one-to-one and are used whenever the compiled
extension is unavailable (or ``GPSEMI_PURE_PYTHON=1`` is set).
"""
import numpy as np


def hermite_eval(n, x):
    """Physicists' Hermite polynomial H_n evaluated elementwise on a real array."""
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        return h_prev
    h = 2.0 * x
    for k in range(1, n):
        h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
    return h


def sech_envelope(amp, phase, sigma, weight):
    """amp * exp(i*phase) * (w/|w|) / cosh(sigma - ln|w|), zero where w == 0.

    ``phase`` and ``sigma`` are already divided by hbar.  The sech is
    evaluated as 2 e^{-|y|} / (1 + e^{-2|y|}) so no intermediate overflows.
    """
    phase = np.asarray(phase, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    weight = np.asarray(weight, dtype=complex)
    r = np.abs(weight)
    out = np.zeros(np.broadcast(phase, sigma, weight).shape, dtype=complex)
    nz = np.broadcast_to(r > 0.0, out.shape)
    ph = np.broadcast_to(phase, out.shape)[nz]
    sg = np.broadcast_to(sigma, out.shape)[nz]
    w = np.broadcast_to(weight, out.shape)[nz]
    rr = np.broadcast_to(r, out.shape)[nz]
    y = np.abs(sg - np.log(rr))
    e = np.exp(-y)
    unit = w.real / rr + 1j * (w.imag / rr)
    out[nz] = amp * np.exp(1j * ph) * unit * (2.0 * e / (1.0 + e * e))
    return out


def chirp_quadrature_1d(x, y, w, phi, alpha, beta):
    """sum_i exp(i[alpha(x^2 + y_i^2) - beta x y_i]) w_i phi_i for every x."""
    x = np.asarray(x, dtype=float)
    ph = alpha * (x[:, None] ** 2 + y[None, :] ** 2) - beta * x[:, None] * y[None, :]
    return np.exp(1j * ph) @ (w * phi)


def chirp_quadrature_2d(x2, x3, y2, y3, w2, w3, phi, alpha2, beta2, alpha3, beta3):
    """Tensor-product chirp sum over a (len(y2), len(y3)) sample array, per output point."""
    x2 = np.asarray(x2, dtype=float)
    x3 = np.asarray(x3, dtype=float)
    a = np.exp(1j * (alpha2 * (x2[:, None] ** 2 + y2[None, :] ** 2)
                     - beta2 * x2[:, None] * y2[None, :])) * w2[None, :]
    b = np.exp(1j * (alpha3 * (x3[:, None] ** 2 + y3[None, :] ** 2)
                     - beta3 * x3[:, None] * y3[None, :])) * w3[None, :]
    return np.einsum("oj,oj->o", a @ phi, b)
