"""Hermite polynomials and the germ ladder operators on polynomial prefactors.

Excited states are P(dx) * |0, t> where |0, t> is the complex Gaussian
vacuum and P is a polynomial in dx = x - X(t).  The vacuum factor is
carried implicitly; the operators act on P only:

    a_j^+ : P -> N_j ( <Q conj(Z_j) - conj(W_j), dx> P - i hbar <conj(Z_j), grad P> )
    a_j   : P -> N_j ( <Q Z_j - W_j, dx> P - i hbar <Z_j, grad P> )

(for a normalized germ the first term of a_j vanishes since W_j = Q Z_j).
"""
from dataclasses import dataclass
from math import factorial, sqrt

import numpy as np

from . import kernels

__all__ = ["hermite_1d", "MultiIndex", "Polynomial", "ladder_apply", "lower_apply", "excited_polynomial"]


def hermite_1d(n, x):
    """Physicists' Hermite polynomial H_n(x) by the three-term recurrence."""
    if n < 0:
        raise ValueError("Hermite degree must be non-negative")
    if np.ndim(x) == 0:
        return float(kernels.hermite_eval(int(n), np.array([float(x)]))[0])
    return kernels.hermite_eval(int(n), np.asarray(x, dtype=float))


@dataclass(frozen=True)
class MultiIndex:
    nu: tuple

    def __post_init__(self):
        nu = tuple(int(v) for v in self.nu)
        if any(v < 0 for v in nu):
            raise ValueError("multi-index entries must be non-negative")
        object.__setattr__(self, "nu", nu)

    @property
    def order(self):
        return sum(self.nu)

    def factorial(self):
        out = 1
        for v in self.nu:
            out *= factorial(v)
        return out

    def __len__(self):
        return len(self.nu)

    def __iter__(self):
        return iter(self.nu)


class Polynomial:
    """Dense multivariate polynomial: {exponent tuple: complex coefficient}."""

    def __init__(self, dim, coeffs=None):
        self.dim = int(dim)
        self.coeffs = {}
        for e, c in (coeffs or {}).items():
            e = tuple(int(v) for v in e)
            if len(e) != self.dim:
                raise ValueError("exponent length does not match dimension")
            if c != 0:
                self.coeffs[e] = self.coeffs.get(e, 0j) + complex(c)

    @classmethod
    def one(cls, dim):
        return cls(dim, {(0,) * dim: 1.0})

    @property
    def degree(self):
        return max((sum(e) for e in self.coeffs), default=0)

    def copy(self):
        return Polynomial(self.dim, dict(self.coeffs))

    def __add__(self, other):
        out = self.copy()
        for e, c in other.coeffs.items():
            out.coeffs[e] = out.coeffs.get(e, 0j) + c
        return out

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, s):
        return Polynomial(self.dim, {e: s * c for e, c in self.coeffs.items()})

    def times_linear(self, v):
        """Multiply by the linear form <v, dx>."""
        out = {}
        for e, c in self.coeffs.items():
            for k in range(self.dim):
                if v[k] == 0:
                    continue
                e2 = list(e)
                e2[k] += 1
                e2 = tuple(e2)
                out[e2] = out.get(e2, 0j) + c * v[k]
        return Polynomial(self.dim, out)

    def directional_derivative(self, v):
        """<v, grad P>."""
        out = {}
        for e, c in self.coeffs.items():
            for k in range(self.dim):
                if e[k] == 0 or v[k] == 0:
                    continue
                e2 = list(e)
                e2[k] -= 1
                e2 = tuple(e2)
                out[e2] = out.get(e2, 0j) + c * e[k] * v[k]
        return Polynomial(self.dim, out)

    def __call__(self, dx):
        """Evaluate on points ``dx`` of shape (..., dim)."""
        dx = np.asarray(dx, dtype=float)
        out = np.zeros(dx.shape[:-1], dtype=complex)
        for e, c in self.coeffs.items():
            term = np.full(dx.shape[:-1], c, dtype=complex)
            for k, p in enumerate(e):
                if p:
                    term = term * dx[..., k] ** p
            out += term
        return out

    def max_abs_diff(self, other):
        keys = set(self.coeffs) | set(other.coeffs)
        return max((abs(self.coeffs.get(e, 0j) - other.coeffs.get(e, 0j)) for e in keys), default=0.0)


def _mode(basis, j, normalizers, hbar):
    n = len(basis)
    if not 0 <= j < n - 1:
        raise IndexError(f"ladder mode index {j} outside 0..{n - 2}")
    return basis[j], float(normalizers[j])


def ladder_apply(basis, Q, poly, j, hbar, normalizers):
    """One creation operator a_j^+ applied to the polynomial prefactor."""
    a, N = _mode(basis, j, normalizers, hbar)
    zc, wc = np.conj(a.Z), np.conj(a.W)
    lin = np.asarray(Q) @ zc - wc
    return (poly.times_linear(lin) - poly.directional_derivative(zc).scale(1j * hbar)).scale(N)


def lower_apply(basis, Q, poly, j, hbar, normalizers):
    """One annihilation operator a_j applied to the polynomial prefactor."""
    a, N = _mode(basis, j, normalizers, hbar)
    lin = np.asarray(Q) @ a.Z - a.W
    return (poly.times_linear(lin) - poly.directional_derivative(a.Z).scale(1j * hbar)).scale(N)


def excited_polynomial(basis, Q, nu, hbar, normalizers):
    """H_nu = prod_j (a_j^+)^{nu_j} / sqrt(nu!) applied to 1."""
    nu = nu if isinstance(nu, MultiIndex) else MultiIndex(tuple(nu))
    n = len(basis)
    if len(nu) != n - 1:
        raise ValueError(f"multi-index needs {n - 1} entries, got {len(nu)}")
    poly = Polynomial.one(n)
    for j, count in enumerate(nu):
        for _ in range(count):
            poly = ladder_apply(basis, Q, poly, j, hbar, normalizers)
    return poly.scale(1.0 / sqrt(nu.factorial()))
