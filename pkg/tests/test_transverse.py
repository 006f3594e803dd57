import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gpsemi.oscillator import OscillatorClosedForm, modulus_well21
from gpsemi.transverse import (KernelCausticError, QuadratureError, TransverseKernelParams, TransverseProfile,
                               axis_kernel, builtin_profile, evolve_profile, green_kernel, hermite_function,
                               mehler, mehler_series, profile_norm, read_profile, series_apply, u_tr,
                               write_profile)

MEHLER_HALF_ORIGIN = 1.1547005383792517  # 1/sqrt(0.75)


def test_mehler_values():
    x = np.linspace(-3, 3, 7)
    np.testing.assert_allclose(mehler(0.0, x, x[::-1]), 1.0)
    assert mehler(0.5, 0.0, 0.0).real == pytest.approx(MEHLER_HALF_ORIGIN, rel=1e-15)
    assert abs(mehler(0.5, 0.0, 0.0) - mehler_series(0.5, 0.0, 0.0, 80)) <= 1e-10


def test_mehler_series_convergence():
    # truncation error decays like |lambda|^N; N = 260 reaches roundoff at 0.9
    for lam in (0.9, 0.9 * np.exp(0.25j * np.pi)):
        g = np.linspace(-2, 2, 21)
        X, Y = np.meshgrid(g, g, indexing="ij")
        assert np.max(np.abs(mehler(lam, X, Y) - mehler_series(lam, X, Y, 260))) <= 1e-9
    d120 = abs(mehler(0.9, 1.2, -0.7) - mehler_series(0.9, 1.2, -0.7, 120))
    d200 = abs(mehler(0.9, 1.2, -0.7) - mehler_series(0.9, 1.2, -0.7, 200))
    assert d200 < 1e-3 * d120


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.05, 3.0), st.sampled_from([1, -1]))
def test_kernel_exchange_symmetry(x, y, tau, sign):
    p = TransverseKernelParams(1.3, 0.7, (0.9, 1.4), signs=(sign, 1))
    if abs(math.sin(0.9 * tau)) < 1e-3 or abs(math.sin(1.4 * tau)) < 1e-3:
        return
    a = green_kernel(p, np.array([x, 0.3]), np.array([y, -0.2]), tau, 0.0)
    b = green_kernel(p, np.array([y, -0.2]), np.array([x, 0.3]), tau, 0.0)
    assert a == pytest.approx(b, rel=1e-12)


def test_kernel_caustic():
    with pytest.raises(KernelCausticError):
        axis_kernel(1.0, 1.0, 1.0, 1, math.pi)
    with pytest.raises(ValueError):
        axis_kernel(1.0, 1.0, 1.0, 1, 0.0)
    A, a, b = axis_kernel(1.0, 1.0, 1.0, -1, math.pi)
    assert np.isfinite([abs(A), a, b]).all()


def test_hermite_functions_orthonormal():
    y = np.linspace(-14, 14, 4001)
    w = np.full(y.size, y[1] - y[0])
    H = np.array([hermite_function(n, y, 1.5, 0.8, 0.6) for n in range(8)])
    np.testing.assert_allclose((H * w) @ H.T, np.eye(8), atol=1e-12)


def test_delta_limit():
    p = TransverseKernelParams(1.0, 1.0, (1.0, 1.0))
    g = builtin_profile("gaussian", p)
    x = np.linspace(-2, 2, 9)
    ev = evolve_profile(p, g, 1e-3, 0.0)
    assert np.max(np.abs(ev(x, 0.5 * x) - g(x, 0.5 * x))) <= 1e-3


@pytest.mark.parametrize("spec, energy", [("gaussian", 0.5 * (1.0 + 1.3)), ("hermite 1 0", 1.5 + 0.65)])
def test_eigenprofile_phases(spec, energy):
    p = TransverseKernelParams(1.0, 1.0, (1.0, 1.3))
    prof = builtin_profile(spec, p)
    x = np.linspace(-3, 3, 13)
    for s, t in ((0.0, 0.7), (0.3, 2.9)):
        got = evolve_profile(p, prof, t, s)(x, 0.4 * x + 0.1)
        want = prof(x, 0.4 * x + 0.1) * np.exp(-1j * energy * (t - s))
        assert np.max(np.abs(got - want)) <= 1e-6 * np.max(np.abs(want))


def test_general_profile_uses_2d_quadrature():
    p = TransverseKernelParams(1.0, 1.0, (1.0, 1.3))
    sep = builtin_profile("hermite 1 1", p)
    gen = TransverseProfile(func=lambda a, b: sep(a, b), dim=2, radius=sep.radius)
    x = np.linspace(-2, 2, 5)
    want = sep(x, -x) * np.exp(-1j * (1.5 + 1.5 * 1.3) * 0.6)
    np.testing.assert_allclose(evolve_profile(p, gen, 0.6)(x, -x), want, atol=1e-8)


def test_identity_at_equal_times():
    p = TransverseKernelParams(1.0, 1.0, (1.0,))
    prof = builtin_profile("hermite 2", p)
    assert evolve_profile(p, prof, 0.4, 0.4) is prof


def test_kernel_equals_spectral_series():
    p = TransverseKernelParams(1.0, 1.0, (1.0,))
    f = lambda y: np.exp(-(y - 0.5) ** 2) * (1.0 + 0.3j * y)  # noqa: E731
    x = np.linspace(-2, 2, 9)
    ev = evolve_profile(p, TransverseProfile(func=f, dim=1, radius=10.0), 0.7)
    assert np.max(np.abs(series_apply(p, f, x, 0.7, 60) - ev(x))) <= 1e-8


def test_hyperbolic_axis_against_direct_quadrature():
    p = TransverseKernelParams(1.0, 1.0, (1.0,), signs=(-1,))
    f = lambda y: np.exp(-y * y)  # noqa: E731
    ev = evolve_profile(p, TransverseProfile(func=f, dim=1, radius=9.0), 0.5)
    y = np.linspace(-9, 9, 20001)
    w = np.full(y.size, y[1] - y[0])
    w[[0, -1]] *= 0.5
    for x in (-1.0, 0.0, 0.7):
        ref = np.sum(green_kernel(p, np.array([[x]]), y[:, None], 0.5, 0.0) * f(y) * w)
        assert ev(np.array([x]))[0] == pytest.approx(ref, rel=1e-9)


def test_composition_and_unitarity():
    p = TransverseKernelParams(1.0, 1.0, (1.0, 1.3))
    prof = TransverseProfile(factors=(lambda y: np.exp(-(y - 0.5) ** 2) * (1 + 0.3j * y),
                                      lambda y: np.exp(-y * y / 1.5)), radius=9.0)
    x = np.linspace(-3, 3, 13)
    e1 = evolve_profile(p, prof, 0.4)
    e2 = evolve_profile(p, e1, 1.1, 0.4)
    e3 = evolve_profile(p, prof, 1.1)
    assert np.max(np.abs(e2(x, 0.7 * x) - e3(x, 0.7 * x))) <= 1e-5
    assert profile_norm(e3) == pytest.approx(profile_norm(prof), rel=1e-5)


def test_quadrature_error_reported():
    p = TransverseKernelParams(1.0, 1.0, (1.0,))
    box = TransverseProfile(func=lambda y: (np.abs(y) < 1.0) + 0j, dim=1, radius=3.0)
    with pytest.raises(QuadratureError):
        evolve_profile(p, box, 0.5, nodes=50, tol=1e-12)(np.array([0.0]))


def test_vacuum_field_from_transverse_operator():
    cf = OscillatorClosedForm((1.0, 1.0, 1.0))
    p = TransverseKernelParams(1.0, 1.0, (1.0, 1.0))
    prof = builtin_profile("gaussian", p, normalized=True)
    g = np.linspace(-2.5, 2.5, 9)
    pts = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 3)
    a, b = u_tr(p, cf, prof, pts, 1.0), cf.psi_pm((0, 0), pts, 1.0)
    assert np.max(np.abs(a - b) / np.abs(b)) <= 1e-6


def test_cauchy_datum():
    cf = OscillatorClosedForm((1.0, 1.0))
    p = TransverseKernelParams(1.0, 1.0, (1.0,))
    prof = builtin_profile("gaussian", p)
    x1, x2 = np.meshgrid(np.linspace(-3, 3, 13), np.linspace(-3, 3, 13), indexing="ij")
    psi = u_tr(p, cf, prof, np.stack([x1, x2], -1), 0.0)
    np.testing.assert_allclose(np.abs(psi), modulus_well21(x1, x2, 0.0), atol=1e-14)
    np.testing.assert_allclose(np.abs(psi), 1 / np.cosh(x1 + 0.5 * x2 ** 2), atol=1e-14)


@pytest.mark.parametrize("dim", [1, 2])
def test_profile_file_roundtrip(tmp_path, dim):
    p = TransverseKernelParams(1.0, 1.0, (1.0,) * dim)
    prof = builtin_profile("hermite " + " ".join(["1"] * dim), p)
    axes = [np.linspace(-6, 6, 241)] * dim
    vals = prof.on_grid(*axes)
    path = tmp_path / "phi.csv"
    write_profile(path, axes, vals)
    back = read_profile(path)
    assert back.dim == dim
    x = np.linspace(-2, 2, 7)
    coords = [x] if dim == 1 else [x, 0.5 * x]
    np.testing.assert_allclose(back(*coords), prof(*coords), atol=2e-3)


def test_profile_validation():
    p = TransverseKernelParams(1.0, 1.0, (1.0, 1.0))
    with pytest.raises(ValueError):
        builtin_profile("hermite 1", p)
    with pytest.raises(ValueError):
        builtin_profile("lorentzian", p)
    with pytest.raises(ValueError):
        evolve_profile(p, builtin_profile("gaussian", p), 0.0, 0.5)
    with pytest.raises(ValueError):
        TransverseKernelParams(1.0, 1.0, (0.0,))
