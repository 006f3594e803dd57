"""Closed forms for the diagonal (an)isotropic oscillator.

Axis 0 carries the surface normal (the longitudinal axis); axes 1..n-1 are
transverse.  Each axis picks the trigonometric family when k_j > 0 and the
hyperbolic family when k_j < 0, with Omega_j = sqrt(|k_j| / m) and

    z    = -tan | tanh        (Q1 on the longitudinal axis is m Omega z)
    zt   =  cos | cosh        (pi(t) = pi0 / zt)
    zc   =  sin | sinh

Trigonometric transverse axes follow the excited-state formula of the
oscillator example literally (constant Q2 = m Omega, (n + 1/2) Omega t phase,
constant pi hbar n / 4 phase).  A constant imaginary Q cannot solve the
Riccati equation on a hyperbolic axis, so those axes use the exact germ
Q = m Omega (sinh 2 Omega t + i) / cosh 2 Omega t instead; both agree at t = 0.
"""
from dataclasses import dataclass, field
from math import factorial, sqrt, pi as PI

import numpy as np
from scipy import integrate

from . import kernels
from .germ import CausticError
from .ladder import hermite_1d

__all__ = [
    "OscillatorClosedForm",
    "modulus_well",
    "modulus_hill",
    "modulus_well21",
    "modulus_hill21",
    "closed_form_normalization",
]

CAUSTIC_TOL = 1e-12


def _z(plus, s):
    return -np.tan(s) if plus else np.tanh(s)


def _zt(plus, s):
    return np.cos(s) if plus else np.cosh(s)


def _zc(plus, s):
    return np.sin(s) if plus else np.sinh(s)


@dataclass(frozen=True)
class OscillatorClosedForm:
    """Analytic germ, trajectory, action and fields of the oscillator example.

    ``action`` selects the S0 integrand: ``"full"`` includes <pi, Hpp pi>/2
    (the integrand the germ integrator accumulates), ``"classical"`` is the
    bare Lagrangian.  ``hermite_norm=False`` drops the (m Omega / pi hbar)^{1/4}
    transverse normalization, which is the sigma^1(0) = 0 convention of the
    plotted moduli.
    """

    k: tuple
    m: float = 1.0
    g: float = 1.0
    hbar: float = 1.0
    pi0: float = 1.0
    Rcheck: float = 0.0
    Rtilde: float = None
    phi0: float = 0.0
    action: str = "full"
    hermite_norm: bool = True
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        k = tuple(float(v) for v in np.atleast_1d(self.k))
        if not 1 <= len(k) <= 3:
            raise ValueError("closed forms cover 1 to 3 dimensions")
        if any(v == 0 for v in k):
            raise ValueError("stiffness entries must be nonzero")
        object.__setattr__(self, "k", k)
        if self.Rtilde is None:
            object.__setattr__(self, "Rtilde", self.Rcheck)
        if abs(self.Rcheck - self.Rtilde) > 1e-14 * max(1.0, abs(self.Rcheck)):
            raise ValueError("Hamilton's equations require Rcheck == Rtilde")
        if self.m <= 0 or self.hbar <= 0 or self.g == 0:
            raise ValueError("need m > 0, hbar > 0, g != 0")
        if self.action not in ("full", "classical"):
            raise ValueError("action must be 'full' or 'classical'")

    @property
    def dim(self):
        return len(self.k)

    @property
    def omega(self):
        return np.sqrt(np.abs(self.k) / self.m)

    @property
    def plus(self):
        return tuple(v > 0 for v in self.k)

    def sign(self, j=0):
        return "+" if self.plus[j] else "-"

    def _check_caustic(self, t):
        if self.plus[0]:
            c = np.cos(self.omega[0] * t)
            if np.any(np.abs(c) < CAUSTIC_TOL):
                raise CausticError(t, np.inf, f"longitudinal caustic at t={t}")

    # trajectory ------------------------------------------------------------
    def closed_trajectory(self, t):
        """Vertex momentum and position (only the longitudinal axis moves)."""
        n, w, plus = self.dim, self.omega[0], self.plus[0]
        s = w * t + self.phi0
        P = np.zeros(n)
        X = np.zeros(n)
        P[0] = (-1.0 if plus else 1.0) * self.Rcheck * w * _zc(plus, s)
        X[0] = self.Rtilde * _zt(plus, s) / self.m
        return P, X

    def action_integrand(self, t, convention=None):
        """<X', P> - H + (full convention) <pi, pi> / 2m; only axis 0 moves."""
        convention = convention or self.action
        m, w, plus = self.m, self.omega[0], self.plus[0]
        s = w * t + self.phi0
        p = (-1.0 if plus else 1.0) * self.Rcheck * w * float(_zc(plus, s))
        x = self.Rtilde * float(_zt(plus, s)) / m
        val = p * p / (2.0 * m) - 0.5 * self.k[0] * x * x
        if convention == "full":
            pn = self.pi0 / float(_zt(plus, w * t))
            val += 0.5 * pn * pn / m
        return val

    def closed_action(self, t, convention=None):
        """S0(t) by adaptive quadrature of the closed-form integrand."""
        convention = convention or self.action
        key = (convention, float(t))
        if key not in self._cache:
            if t == 0:
                val = 0.0
            else:
                self._check_caustic(t)
                val, _ = integrate.quad(lambda s: self.action_integrand(s, convention), 0.0, float(t),
                                        epsabs=1e-13, epsrel=1e-13, limit=400)
            self._cache[key] = val
        return self._cache[key]

    def closed_action_grid(self, ts, convention=None):
        """S0 on an increasing time grid by summing per-interval quadratures."""
        convention = convention or self.action
        ts = np.asarray(ts, float)
        if ts.ndim != 1 or np.any(np.diff(ts) <= 0):
            raise ValueError("times must be strictly increasing")
        knots = np.concatenate([[0.0], ts]) if ts[0] > 0 else ts
        if knots[0] < 0:
            raise ValueError("times must be non-negative")
        for t in knots:
            self._check_caustic(t)
        pieces = [integrate.quad(lambda s: self.action_integrand(s, convention), a, b,
                                 epsabs=1e-14, epsrel=1e-13, limit=200)[0]
                  for a, b in zip(knots[:-1], knots[1:])]
        vals = np.concatenate([[0.0], np.cumsum(pieces)])
        return vals[-ts.size:]

    # germ ------------------------------------------------------------------
    def closed_germ(self, t):
        """(Q1, Q2, pi) at time t."""
        self._check_caustic(t)
        n, m = self.dim, self.m
        Q1 = np.zeros((n, n))
        Q2 = np.zeros((n, n))
        w = self.omega
        Q1[0, 0] = m * w[0] * _z(self.plus[0], w[0] * t)
        for j in range(1, n):
            if self.plus[j]:
                Q2[j, j] = m * w[j]
            else:
                c2 = np.cosh(2 * w[j] * t)
                Q1[j, j] = m * w[j] * np.sinh(2 * w[j] * t) / c2
                Q2[j, j] = m * w[j] / c2
        pvec = np.zeros(n)
        pvec[0] = self.pi0 / _zt(self.plus[0], w[0] * t)
        return Q1, Q2, pvec

    def closed_basis(self, t):
        """(B, C) columns matching ``germ.oscillator_initial_state`` (normal mode last)."""
        n, m, w = self.dim, self.m, self.omega
        B = np.zeros((n, n), complex)
        C = np.zeros((n, n), complex)
        for col, j in enumerate(range(1, n)):
            s = w[j] * t
            a = 1.0 / sqrt(m * w[j])
            if self.plus[j]:
                C[j, col] = a * np.exp(1j * s)
                B[j, col] = 1j * m * w[j] * a * np.exp(1j * s)
            else:
                C[j, col] = a * (np.cosh(s) + 1j * np.sinh(s))
                B[j, col] = m * w[j] * a * (np.sinh(s) + 1j * np.cosh(s))
        s = w[0] * t
        if self.plus[0]:
            C[0, n - 1] = np.cos(s) / self.pi0
            B[0, n - 1] = -m * w[0] * np.sin(s) / self.pi0
        else:
            C[0, n - 1] = np.cosh(s) / self.pi0
            B[0, n - 1] = m * w[0] * np.sinh(s) / self.pi0
        return B, C

    def closed_logdet(self, t):
        """Continuous branch of log det C(t) (valid before the first caustic)."""
        n, w = self.dim, self.omega
        val = np.log(abs(_zt(self.plus[0], w[0] * t) / self.pi0)) + 0j
        if self.plus[0] and np.cos(w[0] * t) < 0:
            val += 1j * PI
        for j in range(1, n):
            s = w[j] * t
            val += -0.5 * np.log(self.m * w[j])
            if self.plus[j]:
                val += 1j * s
            else:
                val += 0.5 * np.log(np.cosh(2 * s)) + 1j * np.arctan(np.tanh(s))
        return complex(val)

    # fields ----------------------------------------------------------------
    def _transverse(self, j, nj, dx, t):
        """(phase*hbar, sigma, complex Hermite weight) contributed by transverse axis j."""
        m, hb, w = self.m, self.hbar, self.omega[j]
        norm = (m * w / (PI * hb)) ** 0.25 if self.hermite_norm else 1.0
        if self.plus[j]:
            phase = PI * hb * nj / 4.0 - hb * (nj + 0.5) * w * t
            sigma = 0.5 * m * w * dx ** 2
            weight = (norm / sqrt(factorial(nj)) * 2.0 ** (-0.5 * nj)
                      * hermite_1d(nj, np.sqrt(m * w / hb) * dx))
            return phase + 0.0 * dx, sigma, weight + 0j
        return self._transverse_general(j, nj, dx, t, norm)

    def _transverse_general(self, j, nj, dx, t, norm):
        # exact germ on the axis: Q = W / Z, phase and modulus of Z(t)/Z(0) from log det C
        m, hb, w = self.m, self.hbar, self.omega[j]
        B, C = self.closed_basis(t)
        B0, C0 = self.closed_basis(0.0)
        col = j - 1
        Z, W = C[j, col], B[j, col]
        q = W / Z
        ratio = Z / C0[j, col]
        phase = 0.5 * q.real * dx ** 2 - 0.5 * hb * np.unwrap([0.0, np.angle(ratio)])[-1]
        sigma = 0.5 * q.imag * dx ** 2 + 0.5 * hb * np.log(abs(ratio))
        kappa = np.sqrt(q.imag / hb)
        gamma = 1j * hb * np.conj(Z) * kappa / np.sqrt(2.0 * hb)
        weight = (norm * np.exp(-0.25j * PI * nj) * gamma ** nj / sqrt(factorial(nj))
                  * hermite_1d(nj, kappa * dx))
        return phase + 0.0 * dx, sigma, weight + 0j

    def psi_pm(self, nu, x, t):
        """Excited soliton field Psi_{nu}(x, t); ``x`` has shape (..., dim)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"points must have trailing dimension {self.dim}")
        nu = tuple(int(v) for v in np.atleast_1d(nu)) if self.dim > 1 else ()
        if len(nu) != self.dim - 1:
            raise ValueError(f"need {self.dim - 1} transverse quantum numbers")
        self._check_caustic(t)
        m, hb, w0, plus = self.m, self.hbar, self.omega[0], self.plus[0]
        P, X = self.closed_trajectory(t)
        dx = x - X
        zt = _zt(plus, w0 * t)
        amp = abs(self.pi0) / (sqrt(m) * abs(self.g) * abs(zt))
        S = (self.closed_action(t) + 0.5 * m * w0 * dx[..., 0] ** 2 * _z(plus, w0 * t) + dx @ P)
        sigma = self.pi0 * dx[..., 0] / zt - 0.5 * hb * np.log(abs(zt))
        weight = np.ones(x.shape[:-1], complex)
        for j in range(1, self.dim):
            ph, sg, wt = self._transverse(j, nu[j - 1], dx[..., j], t)
            S = S + ph
            sigma = sigma + sg
            weight = weight * wt
        return kernels.sech_envelope(amp, S / hb, sigma / hb, weight)

    def abs_psi_vertex(self, t):
        """Amplitude prefactor |pi(t)| / (sqrt(m) g) at the moving maximum."""
        self._check_caustic(t)
        zt = _zt(self.plus[0], self.omega[0] * np.asarray(t, float))
        return abs(self.pi0) / (sqrt(self.m) * abs(self.g) * np.abs(zt))


def closed_form_normalization(cf, nu=None):
    """(N0, Nnu) making the germ-assembled field coincide with ``cf.psi_pm``.

    Re N0 absorbs ln(pi0 / sqrt m) and the transverse Hermite normalization;
    Nnu - N0 = -i pi |nu| / 4 turns the ladder phase (pi/2)|nu| into the
    constant (pi/4)|nu| phase of the closed form.
    """
    n = cf.dim
    nu = (0,) * (n - 1) if nu is None else tuple(int(v) for v in nu)
    re = np.log(abs(cf.pi0) / sqrt(cf.m))
    if cf.hermite_norm:
        re += sum(0.25 * np.log(cf.m * cf.omega[j] / (PI * cf.hbar)) for j in range(1, n))
    N0 = complex(re, 0.0)
    return N0, N0 - 0.25j * PI * sum(nu)


def _sech(y):
    y = np.abs(y)
    e = np.exp(-y)
    return 2 * e / (1 + e * e)


def modulus_well(x, t, hbar=1.0):
    """|Psi+| of the 1+1 well, m = g = pi0 = 1, K = 1."""
    c = np.cos(t)
    return _sech((x / c - 0.5 * hbar * np.log(np.abs(c))) / hbar) / np.abs(c)


def modulus_hill(x, t, hbar=1.0):
    """|Psi-| of the 1+1 hill, m = g = pi0 = 1, K = -1."""
    c = np.cosh(t)
    return _sech((x / c - 0.5 * hbar * np.log(c)) / hbar) / c


def modulus_well21(x1, x2, t, hbar=1.0):
    """|Psi+| of the 2+1 well as printed (x2^2 / 2 transverse term)."""
    c = np.cos(t)
    return _sech((x1 / c + 0.5 * x2 ** 2 - 0.5 * hbar * np.log(np.abs(c))) / hbar) / np.abs(c)


def modulus_hill21(x1, x2, t, hbar=1.0):
    """|Psi-| of the 2+1 hill as printed; exact only at t = 0 (see module doc)."""
    c = np.cosh(t)
    return _sech((x1 / c + 0.5 * x2 ** 2 - 0.5 * hbar * np.log(c)) / hbar) / c
