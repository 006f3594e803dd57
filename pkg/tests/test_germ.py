import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gpsemi.germ import (BranchGuardError, CausticError, DegenerateGermError, GermState, GermVector,
                         check_rank_conditions, d0_matrix, integrate, invariant_report, normalize_germ,
                         oscillator_initial_state, q_matrix, rhs, skew_product, state_from_q)
from gpsemi.model import free_model, oscillator_model

# frozen oracle: -tan(0.5) from an independent mpmath evaluation
Q11_HALF = -0.5463024898437905


def _state(P, X, pi, B, C):
    return GermState(t=0.0, P=np.asarray(P, float), X=np.asarray(X, float), pi=np.asarray(pi, float),
                     B=np.asarray(B, complex), C=np.asarray(C, complex))


def test_free_particle_rates():
    s = _state([0.7, -0.2], [1.0, 2.0], [0, 0], np.zeros((2, 2)), np.eye(2))
    r = rhs(free_model(2), s)
    np.testing.assert_allclose(r.P, 0)
    np.testing.assert_allclose(r.X, s.P)
    assert r.S0 == pytest.approx(0.5 * s.P @ s.P)


def test_oscillator_rates_at_initial_germ():
    s = oscillator_initial_state([1, 1, 1])
    r = rhs(oscillator_model([1, 1, 1]), s)
    np.testing.assert_allclose(q_matrix(s).imag, np.diag([0, 1, 1]), atol=1e-15)
    np.testing.assert_allclose(r.P, 0, atol=1e-15)
    np.testing.assert_allclose(r.pi, 0, atol=1e-15)


def test_variational_flow_of_one_column():
    C = np.array([[1, 0, 0], [0, 1, 0.3], [0, 0.2, 1]], complex)
    s = _state([0, 0, 0], [0, 0, 0], [1, 0, 0], np.zeros((3, 3)), C)
    r = rhs(oscillator_model([1, 1, 1]), s)
    np.testing.assert_allclose(r.C[:, 0], 0)
    np.testing.assert_allclose(r.B[:, 0], [-1, 0, 0])


def test_oscillator_trajectory_and_q_entry():
    k = [1, 1, 1]
    s0 = oscillator_initial_state(k, X0=[0.8, 0, 0])
    tr = integrate(oscillator_model(k), s0, 1.0, 1e-3, error_estimate=False)
    for t in (0.25, 0.5, 1.0):
        st_ = tr.state_at(t)
        assert st_.X[0] == pytest.approx(0.8 * math.cos(t), abs=1e-10)
    assert q_matrix(tr.state_at(0.5))[0, 0].real == pytest.approx(Q11_HALF, abs=1e-9)
    assert tr.state_at(1.0).pi[0] == pytest.approx(1 / math.cos(1.0), abs=1e-9)


def test_interpolated_state_between_steps():
    k = [1, 1]
    tr = integrate(oscillator_model(k), oscillator_initial_state(k), 1.0, 0.05, error_estimate=False)
    mid = tr.state_at(0.525)
    assert mid.pi[0] == pytest.approx(1 / math.cos(0.525), abs=1e-6)
    with pytest.raises(ValueError):
        tr.state_at(1.5)


def test_q_zero_when_b_zero():
    s = _state([0], [0], [1], np.zeros((1, 1)), np.eye(1))
    assert np.all(q_matrix(s) == 0)


def random_symmetric_start(seed, n=3):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n))
    Q1 = 0.5 * (A + A.T)
    Rv = rng.normal(size=(n, n - 1))
    Q2 = Rv @ Rv.T
    pi = np.linalg.svd(Q2)[0][:, -1]
    return state_from_q(rng.normal(size=n), rng.normal(size=n), pi, Q1 + 1j * Q2)


def test_random_start_keeps_q_symmetric():
    s0 = random_symmetric_start(3)
    tr = integrate(oscillator_model([1.0, 2.0, 0.5]), s0, 1.0, 1e-3, error_estimate=False)
    Q = q_matrix(tr.state_at(1.0))
    assert np.max(np.abs(Q - Q.T)) <= 1e-9


def test_skew_products_of_oscillator_modes():
    basis = oscillator_initial_state([1, 1, 1]).basis
    a_tr, a_pi = basis[0], basis[-1]
    assert skew_product(a_tr, a_tr) == 0
    assert skew_product(a_tr, a_tr.conj()) == pytest.approx(2j)
    assert skew_product(a_pi, a_pi.conj()) == pytest.approx(0)


@given(st.lists(st.complex_numbers(max_magnitude=5), min_size=6, max_size=6))
def test_skew_product_antisymmetric(v):
    a = GermVector(np.array(v[0:3]), np.array(v[3:6]))
    b = GermVector(np.array(v[3:6]) * 0.5, np.array(v[0:3]) - 1)
    assert skew_product(a, b) == pytest.approx(-skew_product(b, a))
    assert skew_product(a, a) == 0


def test_d0_structure():
    s = _state([0, 0], [0, 0], [1, 0], np.array([[1.0, 0.2], [0.2, 3.0]]), np.eye(2))
    np.testing.assert_allclose(d0_matrix(s), 0, atol=1e-16)
    D0 = d0_matrix(oscillator_initial_state([1, 1, 1]))
    np.testing.assert_allclose(D0, np.diag([1, 1, 0]), atol=1e-15)


def test_d0_conserved_over_long_window():
    s0 = random_symmetric_start(11)
    tr = integrate(oscillator_model([1.0, -0.5, 2.0]), s0, 5.0, 2e-3, error_estimate=False)
    assert invariant_report(tr)["d0_drift"] <= 1e-10


@pytest.mark.slow
def test_free_particle_d0_drift_after_1e5_steps():
    s0 = state_from_q([0.5, 0], [0, 0], [1.0, 0], np.array([[0.3, 0.1], [0.1, 1 + 0.5j]]))
    tr = integrate(free_model(2), s0, 1.0, 1e-5, error_estimate=False)
    assert len(tr) == 100001
    assert invariant_report(tr)["d0_drift"] <= 1e-12


@given(st.integers(0, 10_000), st.floats(0.2, 3.0))
def test_conservation_and_symmetry_property(seed, t_end):
    s0 = random_symmetric_start(seed, n=2)
    tr = integrate(oscillator_model([1.0, 0.7]), s0, t_end, 0.01, error_estimate=False)
    rep = invariant_report(tr)
    assert rep["d0_drift"] <= 1e-10
    assert rep["q_asymmetry"] <= 1e-9
    assert rep["min_eig_im_q"] >= -1e-9


def test_normalize_already_normalized_is_identity():
    s = oscillator_initial_state([1, 1, 1])
    basis, N = normalize_germ(s.basis, 1.0, pi=s.pi)
    for a, b in zip(basis, s.basis):
        np.testing.assert_allclose(a.Z, b.Z)
        np.testing.assert_allclose(a.W, b.W)
    np.testing.assert_allclose(N, [1 / math.sqrt(2), 1 / math.sqrt(2), 1])


def test_normalizer_formula():
    W = np.array([[0, 0], [2j, 0]])
    C = np.array([[0, 1], [1, 0]], complex)
    basis = [GermVector(W[:, j], C[:, j]) for j in range(2)]
    _, N = normalize_germ(basis, 1.0)
    assert N[0] == pytest.approx(0.5)


@given(st.integers(0, 10_000))
def test_normalized_commutators(seed):
    s = random_symmetric_start(seed)
    basis, N = normalize_germ(s.basis, 0.7, pi=s.pi)
    n = len(basis)
    for j in range(n - 1):
        for k in range(n - 1):
            # [a_j, a_k^+] = i hbar N_j N_k {a_j, a_k*}... scaled to delta_jk
            c = -1j * 0.7 * N[j] * N[k] * skew_product(basis[j], basis[k].conj())
            assert c == pytest.approx(1.0 if j == k else 0.0, abs=1e-10)
    assert complex(basis[-1].Z @ s.pi) == pytest.approx(1.0)


def test_degenerate_germ_rejected():
    with pytest.raises(DegenerateGermError):
        state_from_q([0, 0], [0, 0], [1, 0], 1j * np.eye(2))


def test_rank_conditions():
    s = oscillator_initial_state([1, 1, 1])
    tr = integrate(oscillator_model([1, 1, 1]), s, 1.0, 1e-2, error_estimate=False)
    assert check_rank_conditions(tr.state_at(1.0)).ok
    full = _state([0] * 3, [0] * 3, [1, 0, 0], 1j * np.eye(3), np.eye(3))
    assert not check_rank_conditions(full).q2_ok
    inrange = _state([0] * 3, [0] * 3, [0, 1, 0], 1j * np.diag([0, 1, 1]), np.eye(3))
    rep = check_rank_conditions(inrange)
    assert rep.q2_ok and not rep.augmented_ok


def test_caustic_near_quarter_period():
    k = [1, 1, 1]
    with pytest.raises(CausticError) as exc:
        integrate(oscillator_model(k), oscillator_initial_state(k), 1.6, 1e-3, error_estimate=False)
    assert exc.value.t == pytest.approx(math.pi / 2, abs=1e-3)
    assert isinstance(exc.value, BranchGuardError)


def test_error_estimate_small():
    k = [1, 1]
    tr = integrate(oscillator_model(k), oscillator_initial_state(k), 1.0, 1e-2)
    assert np.nanmax(tr.error_estimates) < 1e-10


def test_logdet_branch_continuous():
    # hill on the normal axis: no caustic, arg det C varies smoothly
    k = [-1, 1, 1]
    tr = integrate(oscillator_model(k), oscillator_initial_state(k), 3.0, 1e-2, error_estimate=False)
    ld = np.array([s.logdetC for s in tr.states])
    assert np.max(np.abs(np.diff(ld.imag))) < 0.1
    direct = np.log(complex(np.linalg.det(tr.states[-1].C)))
    assert np.exp(ld[-1]) == pytest.approx(np.exp(direct), rel=1e-8)
