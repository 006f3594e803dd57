"""Vacuum and excited soliton fields assembled from a germ trajectory.

    Psi_nu = (sqrt<pi, Hpp pi> / g) exp(i S_nu / hbar) / cosh(sigma_nu / hbar)

S_nu and sigma_nu are the vacuum phases shifted by hbar arg H_nu and
-hbar ln|H_nu|, where H_nu is the ladder polynomial.  Neither logarithm is
formed on the grid: the modulus goes through the overflow-safe envelope
kernel, so nodal sets of H_nu give exact zeros.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .germ import GermState, GermVector, normalize_germ, q_matrix
from .ladder import MultiIndex, excited_polynomial

__all__ = ["PhaseAssembly", "SolitonField", "FieldSamples", "vacuum_phases", "field_eval"]


@dataclass(frozen=True)
class PhaseAssembly:
    """Constants entering the phases: hbar, g and the free normalizations."""

    hbar: float
    g: float = 1.0
    N0: complex = 0j
    Nnu: Optional[complex] = None

    def __post_init__(self):
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")
        if self.g == 0:
            raise ValueError("g must be nonzero")
        object.__setattr__(self, "N0", complex(self.N0))
        object.__setattr__(self, "Nnu", complex(self.N0 if self.Nnu is None else self.Nnu))

    @property
    def shift(self):
        """N_nu - N_0."""
        return self.Nnu - self.N0


def _as_points(x, n):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != n:
        raise ValueError(f"points must have trailing dimension {n}, got shape {x.shape}")
    return x


def _vacuum_parts(state, state0, x, hbar, N0, hpp):
    Q = q_matrix(state)
    dx = x - state.X
    dL = state.logdetC - state0.logdetC
    quad = np.einsum("...i,ij,...j->...", dx, Q, dx)
    S = (state.S0 + dx @ state.P + 0.5 * quad.real - 0.5 * hbar * dL.imag + hbar * complex(N0).imag)
    pn = float(state.pi @ hpp @ state.pi)
    sigma = (dx @ state.pi + 0.5 * quad.imag + 0.5 * hbar * np.log(pn)
             + 0.5 * hbar * dL.real - hbar * complex(N0).real)
    return S, sigma, pn


def vacuum_phases(traj, t, x, hbar, N0=0j):
    """(S0, sigma0) of the vacuum field at time ``t`` on points ``x`` (..., n)."""
    state = traj.state_at(t)
    x = _as_points(x, state.dim)
    hpp = np.asarray(traj.model.hpp(t), float)
    S, sigma, _ = _vacuum_parts(state, traj.states[0], x, hbar, N0, hpp)
    return S, sigma


@dataclass
class FieldSamples:
    psi: np.ndarray
    S: np.ndarray
    sigma: np.ndarray
    nonfinite: int = 0


@dataclass
class SolitonField:
    """Psi_nu evaluator over a germ trajectory.

    The trajectory's germ is normalized once at its initial time; the same
    linear recombination is applied to the propagated columns at every t.
    """

    trajectory: object
    phase: PhaseAssembly
    nu: MultiIndex = None
    _transform: np.ndarray = field(init=False, repr=False)
    _normalizers: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.trajectory.dim
        if self.nu is None:
            self.nu = MultiIndex((0,) * (n - 1))
        elif not isinstance(self.nu, MultiIndex):
            self.nu = MultiIndex(tuple(self.nu))
        if len(self.nu) != n - 1:
            raise ValueError(f"multi-index needs {n - 1} entries for dimension {n}")
        s0 = self.trajectory.states[0]
        basis, N = normalize_germ(s0.basis, self.phase.hbar, pi=s0.pi)
        C_norm = np.column_stack([a.Z for a in basis])
        self._transform = np.linalg.solve(s0.C, C_norm)
        self._normalizers = N

    @property
    def hbar(self):
        return self.phase.hbar

    @property
    def normalizers(self):
        return self._normalizers.copy()

    def normalized_basis(self, state: GermState):
        B = state.B @ self._transform
        C = state.C @ self._transform
        return [GermVector(B[:, j], C[:, j]) for j in range(state.dim)]

    def polynomial(self, t):
        """Ladder polynomial H_nu(dx) at time t."""
        state = self.trajectory.state_at(t)
        return excited_polynomial(self.normalized_basis(state), q_matrix(state), self.nu,
                                  self.hbar, self._normalizers)

    def amplitude(self, t):
        state = self.trajectory.state_at(t)
        hpp = np.asarray(self.trajectory.model.hpp(t), float)
        return float(np.sqrt(state.pi @ hpp @ state.pi)) / self.phase.g

    def _evaluate_chunk(self, state, poly, x, t):
        hb = self.hbar
        hpp = np.asarray(self.trajectory.model.hpp(t), float)
        S0, sig0, pn = _vacuum_parts(state, self.trajectory.states[0], x, hb, self.phase.N0, hpp)
        w = poly(x - state.X) if self.nu.order else np.ones(x.shape[:-1], complex)
        shift = self.phase.shift
        amp = np.sqrt(pn) / self.phase.g
        psi = kernels.sech_envelope(amp, S0 / hb + shift.imag, sig0 / hb - shift.real, w)
        r = np.abs(w)
        with np.errstate(divide="ignore"):
            S = S0 + hb * np.angle(w) + hb * shift.imag
            sigma = sig0 - hb * np.log(r) - hb * shift.real
        return psi, S, sigma

    def evaluate(self, t, x, with_phases=False):
        """Psi_nu at time t on points ``x`` of shape (..., n)."""
        state = self.trajectory.state_at(t)
        x = _as_points(x, state.dim)
        poly = self.polynomial(t) if self.nu.order else None
        shape = x.shape[:-1]
        flat = x.reshape(-1, state.dim)
        nt = kernels.num_threads()
        if nt > 1 and flat.shape[0] >= 4096:
            chunks = np.array_split(flat, nt)
            with ThreadPoolExecutor(nt) as ex:
                parts = list(ex.map(lambda c: self._evaluate_chunk(state, poly, c, t), chunks))
            psi, S, sigma = (np.concatenate([p[i] for p in parts]) for i in range(3))
        else:
            psi, S, sigma = self._evaluate_chunk(state, poly, flat, t)
        psi, S, sigma = psi.reshape(shape), S.reshape(shape), sigma.reshape(shape)
        if with_phases:
            bad = int(np.count_nonzero(~np.isfinite(psi)))
            return FieldSamples(psi=psi, S=S, sigma=sigma, nonfinite=bad)
        return psi

    def __call__(self, x, t):
        return self.evaluate(t, x)


def field_eval(fld, t, x):
    """Field samples (with phases and a non-finite count) at time ``t``."""
    return fld.evaluate(t, x, with_phases=True)
