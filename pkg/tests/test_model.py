import numpy as np
import pytest
from hypothesis import given, strategies as st

from gpsemi.model import (DimensionError, HamiltonianModel, derivative_blocks, eval_symbol, free_model,
                          model_from_name, oscillator_model)

vec3 = st.lists(st.floats(-3, 3), min_size=3, max_size=3).map(np.array)


@pytest.mark.parametrize("p, x, want", [
    ((1, 0, 0), (0, 0, 0), 0.5),
    ((0, 0, 0), (2, 0, 0), 2.0),
    ((1, 1, 1), (1, 1, 1), 3.0),
])
def test_oscillator_symbol_values(p, x, want):
    assert eval_symbol(oscillator_model([1, 1, 1]), p, x, 0.0) == pytest.approx(want, abs=1e-15)


def test_restoring_force_blocks():
    d = derivative_blocks(oscillator_model([1, 1, 1]), np.zeros(3), np.array([1.0, 0, 0]), 0.0)
    np.testing.assert_allclose(d.Hx, [1, 0, 0])
    np.testing.assert_allclose(d.Hxx, np.eye(3))
    np.testing.assert_allclose(d.Hxp, 0)


def test_velocity_is_p_over_m():
    d = derivative_blocks(oscillator_model([3.0, -1.0, 0.5], m=2.0), np.array([2.0, 0, 0]), np.zeros(3), 0.0)
    np.testing.assert_allclose(d.Hp, [1, 0, 0])


def coupled_model():
    # <p, hvec> with hvec = (x2, 0, 0) plus a sine potential
    return HamiltonianModel(
        dim=3,
        hpp=lambda t: np.diag([1.0, 2.0, 0.5]),
        hvec=lambda x, t: np.array([x[1], 0.0, 0.0]),
        h0=lambda x, t: np.sin(x[0]) + 0.5 * x[2] ** 2,
        hvec_x=lambda x, t: np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
        h0_x=lambda x, t: np.array([np.cos(x[0]), 0.0, x[2]]),
    )


def _fd_grad(f, z, h=1e-5):
    out = np.zeros_like(z)
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = h
        out[i] = (f(z + e) - f(z - e)) / (2 * h)
    return out


def test_mixed_block_matches_finite_differences():
    m = coupled_model()
    p, x = np.array([0.3, -0.2, 0.7]), np.array([0.1, 0.4, -0.6])
    d = derivative_blocks(m, p, x, 0.0)
    fd = np.array([_fd_grad(lambda xx: derivative_blocks(m, p, xx, 0.0).Hp[j], x) for j in range(3)])
    # Hxp[i, j] = d^2 H / dx_i dp_j
    np.testing.assert_allclose(d.Hxp, fd.T, atol=1e-8)
    assert m.approximate_hessian


@given(vec3, vec3)
def test_blocks_match_finite_differences_of_symbol(p, x):
    m = coupled_model()
    d = derivative_blocks(m, p, x, 0.0)
    f = lambda pp, xx: eval_symbol(m, pp, xx, 0.0)  # noqa: E731
    np.testing.assert_allclose(d.Hp, _fd_grad(lambda z: f(z, x), p), atol=1e-7)
    np.testing.assert_allclose(d.Hx, _fd_grad(lambda z: f(p, z), x), atol=1e-7)
    hxx = np.array([_fd_grad(lambda z: derivative_blocks(m, p, z, 0.0).Hx[i], x, 1e-4) for i in range(3)])
    np.testing.assert_allclose(d.Hxx, hxx, atol=1e-6)


@given(st.lists(st.floats(-5, 5).filter(lambda v: abs(v) > 1e-3), min_size=1, max_size=3),
       st.floats(0.1, 10))
def test_hpp_symmetric(k, m):
    hpp = oscillator_model(k, m).hpp(0.3)
    assert np.max(np.abs(hpp - hpp.T)) <= 1e-14


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        eval_symbol(oscillator_model([1, 1]), np.zeros(3), np.zeros(2), 0.0)


def test_named_models():
    assert model_from_name("free", dim=2).dim == 2
    assert model_from_name("oscillator", k=[1, -1]).params[1][1] == (1.0, -1.0)
    with pytest.raises(ValueError):
        model_from_name("anharmonic", dim=1)
    with pytest.raises(ValueError):
        free_model(1, m=0.0)
