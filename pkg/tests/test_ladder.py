import math
from functools import lru_cache
from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gpsemi.germ import integrate, oscillator_initial_state, q_matrix
from gpsemi.ladder import MultiIndex, Polynomial, excited_polynomial, hermite_1d, ladder_apply, lower_apply
from gpsemi.model import oscillator_model


def test_hermite_values():
    assert hermite_1d(0, 0.3) == 1.0
    assert hermite_1d(1, 0.5) == 1.0
    assert hermite_1d(3, 1.0) == -4.0
    with pytest.raises(ValueError):
        hermite_1d(-1, 0.0)


@given(st.integers(0, 12), st.floats(-4, 4))
def test_hermite_matches_numpy(n, x):
    ref = np.polynomial.hermite.hermval(x, [0] * n + [1])
    assert hermite_1d(n, x) == pytest.approx(ref, rel=1e-12, abs=1e-9)


@lru_cache(maxsize=None)
def _germ(t=0.0, k=(1.0, 1.0, 1.0), hbar=1.0):
    k = list(k)
    s0 = oscillator_initial_state(k)
    if t == 0.0:
        st_ = s0
    else:
        st_ = integrate(oscillator_model(k), s0, t, 1e-3, error_estimate=False).state_at(t)
    N = np.array([1 / math.sqrt(2 * hbar)] * (len(k) - 1) + [1.0])
    return st_.basis, q_matrix(st_), N


def _hermite_product(nu, x, hbar, phase):
    out = np.ones(x.shape[:-1], complex) * phase ** sum(nu)
    for j, n in enumerate(nu, start=1):
        out *= hermite_1d(n, x[..., j] / math.sqrt(hbar)) / math.sqrt(2.0 ** n * math.factorial(n))
    return out


@pytest.mark.parametrize("t", [0.0, 0.7])
@pytest.mark.parametrize("hbar", [1.0, 0.3])
def test_ladder_states_are_hermite_products(t, hbar):
    basis, Q, N = _germ(t, hbar=hbar)
    x = np.random.default_rng(1).normal(size=(30, 3))
    phase = 1j * np.exp(-1j * t)
    for nu in product(range(5), repeat=2):
        if sum(nu) > 4:
            continue
        poly = excited_polynomial(basis, Q, nu, hbar, N)
        assert poly.degree == sum(nu)
        np.testing.assert_allclose(poly(x), _hermite_product(nu, x, hbar, phase), rtol=1e-8, atol=1e-8)


def test_single_application_is_linear_form():
    basis, Q, N = _germ()
    p = ladder_apply(basis, Q, Polynomial.one(3), 0, 1.0, N)
    want = N[0] * (Q @ np.conj(basis[0].Z) - np.conj(basis[0].W))
    got = np.array([p.coeffs.get(e, 0j) for e in [(1, 0, 0), (0, 1, 0), (0, 0, 1)]])
    np.testing.assert_allclose(got, want)
    assert p.degree == 1


def test_two_applications_give_h2():
    basis, Q, N = _germ()
    p = ladder_apply(basis, Q, ladder_apply(basis, Q, Polynomial.one(3), 1, 1.0, N), 1, 1.0, N)
    x = np.linspace(-2, 2, 9)
    pts = np.stack([0 * x, 0 * x, x], -1)
    # (a^+)^2 |0> = sqrt(2) |2>, |2> ~ -H2(x)/sqrt(8)
    np.testing.assert_allclose(p(pts), -(4 * x ** 2 - 2) / 2.0, atol=1e-12)


@given(st.integers(0, 3), st.integers(0, 3), st.sampled_from([0.25, 1.0, 2.0]))
def test_fock_lowering(n2, n3, hbar):
    basis, Q, N = _germ(0.4, hbar=hbar)
    nu = (n2, n3)
    poly = excited_polynomial(basis, Q, nu, hbar, N)
    for j in range(2):
        low = lower_apply(basis, Q, poly, j, hbar, N)
        if nu[j] == 0:
            assert low.max_abs_diff(Polynomial(3)) < 1e-10
        else:
            nu2 = list(nu)
            nu2[j] -= 1
            ref = excited_polynomial(basis, Q, nu2, hbar, N).scale(math.sqrt(nu[j]))
            assert low.max_abs_diff(ref) < 1e-10


@given(st.integers(0, 2), st.integers(0, 2))
def test_commutator_on_polynomials(n2, n3):
    basis, Q, N = _germ(0.3)
    poly = excited_polynomial(basis, Q, (n2, n3), 1.0, N)
    for j in range(2):
        for k in range(2):
            a = lower_apply(basis, Q, ladder_apply(basis, Q, poly, k, 1.0, N), j, 1.0, N)
            b = ladder_apply(basis, Q, lower_apply(basis, Q, poly, j, 1.0, N), k, 1.0, N)
            target = poly if j == k else Polynomial(3)
            assert (a - b).max_abs_diff(target) < 1e-10


def test_multi_index():
    nu = MultiIndex((2, 1))
    assert nu.order == 3 and nu.factorial() == 2 and len(nu) == 2
    with pytest.raises(ValueError):
        MultiIndex((-1, 0))
    basis, Q, N = _germ()
    with pytest.raises(IndexError):
        ladder_apply(basis, Q, Polynomial.one(3), 2, 1.0, N)
    with pytest.raises(ValueError):
        excited_polynomial(basis, Q, (1,), 1.0, N)
