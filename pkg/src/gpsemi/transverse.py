"""Transverse evolution: oscillator Green kernels, profile propagation, u_tr.

Per transverse axis with frequency Omega the kernel of exp(-i tau H / hbar),
H = p^2/2m +- m Omega^2 y^2 / 2, is

    K(x, y) = A exp(i [alpha (x^2 + y^2) - beta x y])

with (trigonometric axis)

    alpha = m Omega cos(Omega tau) / (2 hbar sin(Omega tau))
    beta  = m Omega / (hbar sin(Omega tau))
    A     = sqrt(m Omega / (2 pi hbar |sin(Omega tau)|)) exp(-i pi/4 - i pi k / 2)

where k = floor(Omega tau / pi) counts the caustics already crossed.  The
hyperbolic axis (an inverted oscillator) uses cosh/sinh and has no caustics.
Profiles are propagated by a uniform trapezoid rule on a truncation box, and
the quadrature is re-run with doubled nodes to estimate its error.
"""
from dataclasses import dataclass, field
from math import factorial, pi as PI
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import kernels
from .germ import CausticError
from .ladder import hermite_1d

__all__ = [
    "SingularKernelError",
    "KernelCausticError",
    "QuadratureError",
    "mehler",
    "mehler_series",
    "hermite_function",
    "TransverseKernelParams",
    "axis_kernel",
    "green_kernel",
    "TransverseProfile",
    "EvolvedProfile",
    "evolve_profile",
    "series_apply",
    "profile_norm",
    "builtin_profile",
    "read_profile",
    "write_profile",
    "u_tr",
]


class SingularKernelError(ValueError):
    """Mehler closed form requested at lambda^2 = 1."""


class KernelCausticError(CausticError):
    """sin(Omega (t - s)) = 0 on some transverse axis."""


class QuadratureError(RuntimeError):
    """Node doubling changed the quadrature by more than the tolerance."""

    def __init__(self, estimate, tol, msg=None):
        self.estimate = float(estimate)
        self.tol = float(tol)
        super().__init__(msg or f"quadrature did not converge: change {estimate:.3e} > tol {tol:.3e}")


# Mehler ------------------------------------------------------------------
def mehler(lam, x, y):
    """(1 - lam^2)^{-1/2} exp[(2 x y lam - (x^2 + y^2) lam^2) / (1 - lam^2)]."""
    lam = complex(lam)
    d = 1.0 - lam * lam
    if abs(d) < 1e-15:
        raise SingularKernelError(f"Mehler kernel is singular at lambda={lam}")
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    return np.exp((2.0 * x * y * lam - (x * x + y * y) * lam * lam) / d) / np.sqrt(d)


def mehler_series(lam, x, y, N):
    """Partial sum over n <= N of (lam/2)^n H_n(x) H_n(y) / n!.

    Uses the orthonormal recursion for H_n / sqrt(2^n n!) so no term
    overflows for large N.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    hx_prev, hy_prev = np.ones_like(x), np.ones_like(y)
    total = np.ones(np.broadcast(x, y).shape, complex)
    if N == 0:
        return total
    hx, hy = np.sqrt(2.0) * x, np.sqrt(2.0) * y
    lp = complex(lam)
    total = total + lp * hx * hy
    for n in range(1, N):
        a = np.sqrt(2.0 / (n + 1))
        b = np.sqrt(n / (n + 1))
        hx_prev, hx = hx, a * x * hx - b * hx_prev
        hy_prev, hy = hy, a * y * hy - b * hy_prev
        lp *= lam
        total = total + lp * hx * hy
    return total


def hermite_function(n, x, m=1.0, omega=1.0, hbar=1.0):
    """Normalized oscillator eigenfunction psi_n(x)."""
    xi = np.sqrt(m * omega / hbar) * np.asarray(x, float)
    c = (m * omega / (PI * hbar)) ** 0.25 / np.sqrt(2.0 ** n * factorial(n))
    return c * hermite_1d(n, xi) * np.exp(-0.5 * xi * xi)


# kernel ------------------------------------------------------------------
@dataclass(frozen=True)
class TransverseKernelParams:
    """Per-axis data of the transverse quadratic Hamiltonian.

    ``signs[j]`` is +1 for a well (trigonometric kernel) and -1 for a hill
    (hyperbolic kernel).  ``centers`` shift both kernel arguments.
    """

    m: float
    hbar: float
    omegas: tuple
    signs: tuple = None
    centers: tuple = None

    def __post_init__(self):
        om = tuple(float(v) for v in np.atleast_1d(self.omegas))
        if any(not v > 0 for v in om):
            raise ValueError("transverse frequencies must be positive")
        object.__setattr__(self, "omegas", om)
        signs = (1,) * len(om) if self.signs is None else tuple(int(np.sign(v)) for v in self.signs)
        if len(signs) != len(om) or any(v == 0 for v in signs):
            raise ValueError("signs must be +1/-1 per axis")
        object.__setattr__(self, "signs", signs)
        c = (0.0,) * len(om) if self.centers is None else tuple(float(v) for v in self.centers)
        if len(c) != len(om):
            raise ValueError("one center per axis")
        object.__setattr__(self, "centers", c)
        if self.m <= 0 or self.hbar <= 0:
            raise ValueError("need m > 0 and hbar > 0")

    @property
    def dim(self):
        return len(self.omegas)

    @classmethod
    def from_stiffness(cls, k, m=1.0, hbar=1.0, centers=None):
        k = np.atleast_1d(np.asarray(k, float))
        return cls(m=m, hbar=hbar, omegas=tuple(np.sqrt(np.abs(k) / m)), signs=tuple(np.sign(k)),
                   centers=centers)


def axis_kernel(m, hbar, omega, sign, tau):
    """(A, alpha, beta) of the one-axis kernel for elapsed time ``tau`` > 0."""
    if not tau > 0:
        raise ValueError("kernel needs t > s; t == s is the identity")
    s_ = omega * tau
    if sign > 0:
        sn, cs = np.sin(s_), np.cos(s_)
        if abs(sn) < 1e-12:
            raise KernelCausticError(tau, np.inf, f"transverse caustic: sin(Omega tau)=0 at tau={tau}")
        k = int(np.floor(s_ / PI))
    else:
        sn, cs = np.sinh(s_), np.cosh(s_)
        k = 0
    alpha = m * omega * cs / (2.0 * hbar * sn)
    beta = m * omega / (hbar * sn)
    A = np.sqrt(m * omega / (2.0 * PI * hbar * abs(sn))) * np.exp(-0.25j * PI - 0.5j * PI * k)
    return complex(A), float(alpha), float(beta)


def green_kernel(params, x, y, t, s):
    """Product kernel G(x, y; t, s) for points of shape (..., dim)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    out = np.ones(np.broadcast(x[..., 0], y[..., 0]).shape, complex)
    for j in range(params.dim):
        A, a, b = axis_kernel(params.m, params.hbar, params.omegas[j], params.signs[j], t - s)
        c = params.centers[j]
        u, v = x[..., j] - c, y[..., j] - c
        out = out * A * np.exp(1j * (a * (u * u + v * v) - b * u * v))
    return out


# profiles ----------------------------------------------------------------
@dataclass
class TransverseProfile:
    """Complex transverse function of 1 or 2 variables.

    ``func`` is vectorized: func(y2) or func(y2, y3).  ``factors`` (one 1D
    callable per axis) marks a product profile and lets the quadrature run
    per axis.  ``radius`` is the half width of the truncation box around
    ``center``.
    """

    func: Optional[Callable] = None
    dim: int = 2
    radius: float = 8.0
    center: tuple = None
    factors: Optional[Sequence[Callable]] = None
    name: str = "profile"

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("transverse profiles are 1D or 2D")
        if self.center is None:
            self.center = (0.0,) * self.dim
        if self.func is None and self.factors is None:
            raise ValueError("profile needs func or factors")
        if self.factors is not None and len(self.factors) != self.dim:
            raise ValueError("one factor per axis")

    @property
    def separable(self):
        return self.factors is not None

    def __call__(self, *coords):
        coords = [np.asarray(c, float) for c in coords]
        if len(coords) != self.dim:
            raise ValueError(f"profile takes {self.dim} coordinates")
        if self.factors is not None:
            out = np.asarray(self.factors[0](coords[0]), complex)
            for f, c in zip(self.factors[1:], coords[1:]):
                out = out * f(c)
            return out
        return np.asarray(self.func(*coords), complex)

    def on_grid(self, *axes):
        """Samples on the tensor grid spanned by 1D ``axes`` (shape len0 x len1)."""
        if self.factors is not None:
            vals = [np.asarray(f(np.asarray(a, float)), complex) for f, a in zip(self.factors, axes)]
            return vals[0] if self.dim == 1 else np.multiply.outer(vals[0], vals[1])
        mesh = np.meshgrid(*axes, indexing="ij")
        return self(*mesh)

    def box(self, j):
        return self.center[j] - self.radius, self.center[j] + self.radius


def _trapezoid(lo, hi, n):
    y = np.linspace(lo, hi, n)
    h = (hi - lo) / (n - 1)
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return y, w


def _auto_nodes(alpha, beta, lo, hi, xmax, minimum):
    """Nodes resolving the chirp exp(i(alpha y^2 - beta x y)) with margin."""
    freq = 2.0 * abs(alpha) * max(abs(lo), abs(hi)) + abs(beta) * xmax
    n = int(np.ceil(4.0 * freq * (hi - lo) / PI)) + 1
    return max(minimum, n)


def _quad_axis(A, alpha, beta, c, fvals_fn, lo, hi, x, nodes):
    y, w = _trapezoid(lo, hi, nodes)
    phi = np.ascontiguousarray(fvals_fn(y), dtype=complex)
    u = np.ascontiguousarray(np.asarray(x, float).ravel() - c)
    v = np.ascontiguousarray(y - c)
    return A * kernels.chirp_quadrature_1d(u, v, np.ascontiguousarray(w), phi, alpha, beta)


@dataclass
class EvolvedProfile(TransverseProfile):
    """Profile propagated from time s to time t; evaluated on demand.

    ``last_error`` holds the node-doubling estimate (absolute) of the most
    recent evaluation.
    """

    params: TransverseKernelParams = None
    source: TransverseProfile = None
    tau: float = 0.0
    nodes: int = 200
    tol: float = 1e-7
    last_error: float = 0.0

    def _axis_eval(self, j, f, x):
        p = self.params
        A, a, b = axis_kernel(p.m, p.hbar, p.omegas[j], p.signs[j], self.tau)
        lo, hi = self.source.box(j)
        c = p.centers[j]
        xmax = float(np.max(np.abs(np.asarray(x) - c))) if np.size(x) else 0.0
        n = _auto_nodes(a, b, lo - c, hi - c, xmax, self.nodes)
        r1 = _quad_axis(A, a, b, c, f, lo, hi, x, n)
        r2 = _quad_axis(A, a, b, c, f, lo, hi, x, 2 * n - 1)
        return r2.reshape(np.shape(x)), float(np.max(np.abs(r2 - r1), initial=0.0)), r2

    def _check(self, err, vals):
        scale = max(float(np.max(np.abs(vals), initial=0.0)), 1e-300)
        if err > self.tol * scale:
            raise QuadratureError(err / scale, self.tol)

    def _eval_2d(self, x2, x3):
        p = self.params
        pars = [axis_kernel(p.m, p.hbar, p.omegas[j], p.signs[j], self.tau) for j in range(2)]
        (A2, a2, b2), (A3, a3, b3) = pars
        lo2, hi2 = self.source.box(0)
        lo3, hi3 = self.source.box(1)
        c2, c3 = p.centers
        u2 = np.ascontiguousarray(x2.ravel() - c2)
        u3 = np.ascontiguousarray(x3.ravel() - c3)
        n2 = _auto_nodes(a2, b2, lo2 - c2, hi2 - c2, float(np.max(np.abs(u2), initial=0)), self.nodes)
        n3 = _auto_nodes(a3, b3, lo3 - c3, hi3 - c3, float(np.max(np.abs(u3), initial=0)), self.nodes)
        res = []
        for k2, k3 in ((n2, n3), (2 * n2 - 1, 2 * n3 - 1)):
            y2, w2 = _trapezoid(lo2, hi2, k2)
            y3, w3 = _trapezoid(lo3, hi3, k3)
            phi = np.ascontiguousarray(self.source.on_grid(y2, y3), dtype=complex)
            val = kernels.chirp_quadrature_2d(u2, u3, np.ascontiguousarray(y2 - c2),
                                              np.ascontiguousarray(y3 - c3), w2, w3, phi,
                                              a2, b2, a3, b3)
            res.append(A2 * A3 * val)
        return res[1], float(np.max(np.abs(res[1] - res[0]), initial=0.0))

    def __call__(self, *coords):
        coords = [np.asarray(c, float) for c in coords]
        shape = np.broadcast(*coords).shape
        coords = [np.broadcast_to(c, shape) for c in coords]
        if self.source.separable:
            vals, errs = [], []
            for j, (f, x) in enumerate(zip(self.source.factors, coords)):
                val, err, _ = self._axis_eval(j, f, x)
                vals.append(val)
                errs.append(err)
            mags = [float(np.max(np.abs(v), initial=0.0)) for v in vals]
            # first-order error of a product from the per-factor errors
            err_bound = sum(e * float(np.prod(mags[:j] + mags[j + 1:])) for j, e in enumerate(errs))
            out = np.prod(vals, axis=0) if len(vals) > 1 else vals[0]
            self.last_error = err_bound
            self._check(err_bound, out)
            return out
        if self.dim == 1:
            val, err, _ = self._axis_eval(0, self.source.func, coords[0])
        else:
            val, err = self._eval_2d(*coords)
            val = val.reshape(shape)
        self.last_error = err
        self._check(err, val)
        return val


def evolve_profile(params, profile, t, s=0.0, nodes=200, tol=1e-7):
    """Propagate ``profile`` from time ``s`` to ``t`` (lazy; evaluate by calling).

    t == s returns the profile unchanged.  Product profiles stay products:
    each factor is propagated by its own one-axis quadrature.
    """
    if params.dim != profile.dim:
        raise ValueError("profile and kernel dimensions differ")
    tau = float(t) - float(s)
    if tau == 0.0:
        return profile
    if tau < 0:
        raise ValueError("backward evolution is not supported")
    for j in range(params.dim):
        axis_kernel(params.m, params.hbar, params.omegas[j], params.signs[j], tau)
    ev = EvolvedProfile(func=profile, dim=profile.dim, radius=profile.radius, center=profile.center,
                        factors=None, name=f"{profile.name}@{tau:g}", params=params, source=profile,
                        tau=tau, nodes=int(nodes), tol=float(tol))
    ev.func = ev.__call__
    if profile.separable:
        ev.factors = tuple(_AxisEvolved(ev, j, f) for j, f in enumerate(profile.factors))
    return ev


@dataclass
class _AxisEvolved:
    """One propagated factor of a product profile (itself usable as a factor)."""

    parent: EvolvedProfile
    j: int
    f: Callable

    def __call__(self, x):
        x = np.asarray(x, float)
        val, err, _ = self.parent._axis_eval(self.j, self.f, x)
        self.parent._check(err, val)
        return val


def series_apply(params, f, x, tau, N, j=0, nodes=2001, radius=None):
    """Spectral form of the one-axis propagator applied to f (trigonometric axis).

    sum_{n<=N} exp(-i (n + 1/2) Omega tau) <psi_n, f> psi_n(x), with the
    overlaps computed by the trapezoid rule on [-radius, radius].
    """
    if params.signs[j] < 0:
        raise ValueError("series form needs a trigonometric axis")
    m, hb, om, c = params.m, params.hbar, params.omegas[j], params.centers[j]
    R = radius if radius is not None else 12.0 * np.sqrt(hb / (m * om)) + 1.0
    y, w = _trapezoid(c - R, c + R, nodes)
    fy = np.asarray(f(y), complex) * w
    x = np.asarray(x, float)
    out = np.zeros(x.shape, complex)
    for n in range(N + 1):
        psi_y = hermite_function(n, y - c, m, om, hb)
        out += np.exp(-1j * (n + 0.5) * om * tau) * (psi_y @ fy) * hermite_function(n, x - c, m, om, hb)
    return out


def profile_norm(profile, radius=None, nodes=401):
    """L2 norm by the trapezoid rule on the profile's box (or a given radius)."""
    axes = []
    for j in range(profile.dim):
        lo, hi = profile.box(j)
        if radius is not None:
            lo, hi = profile.center[j] - radius, profile.center[j] + radius
        axes.append(_trapezoid(lo, hi, nodes))
    if profile.separable:
        total = 1.0
        for (y, w), f in zip(axes, profile.factors):
            total *= float(np.sum(w * np.abs(f(y)) ** 2))
        return np.sqrt(total)
    vals = profile.on_grid(*[a[0] for a in axes])
    wts = axes[0][1] if profile.dim == 1 else np.multiply.outer(axes[0][1], axes[1][1])
    return float(np.sqrt(np.sum(wts * np.abs(vals) ** 2)))


# built-ins and I/O ---------------------------------------------------------
def builtin_profile(spec, params, normalized=False, radius=None):
    """``"gaussian"`` (transverse ground state) or ``"hermite n2 [n3]"``.

    Both are products of one-axis oscillator eigenfunctions centered on the
    kernel centers; ``normalized=False`` drops the L2 constants so the
    Gaussian equals 1 at its center.
    """
    words = spec.split()
    d = params.dim
    if words[0] == "gaussian":
        ns = [0] * d
    elif words[0] == "hermite":
        ns = [int(v) for v in words[1:]]
        if len(ns) != d:
            raise ValueError(f"'hermite' needs {d} quantum numbers for dimension {d}")
    else:
        raise ValueError(f"unknown profile {spec!r}")
    if any(v < 0 for v in ns):
        raise ValueError("quantum numbers must be non-negative")
    facs = []
    widths = []
    for j, n in enumerate(ns):
        om = params.omegas[j]
        widths.append(np.sqrt(params.hbar / (params.m * om)))
        c = params.centers[j]
        scale = 1.0 if normalized else 1.0 / hermite_function(0, 0.0, params.m, om, params.hbar)

        def fac(y, n=n, om=om, c=c, scale=scale):
            return scale * hermite_function(n, np.asarray(y, float) - c, params.m, om, params.hbar) + 0j

        facs.append(fac)
    R = radius if radius is not None else max(widths) * (8.0 + np.sqrt(2 * max(ns) + 1))
    return TransverseProfile(dim=d, radius=R, center=tuple(params.centers), factors=tuple(facs), name=spec)


def write_profile(path, axes, values, delimiter=","):
    """Write sampled profile rows (x2[, x3], Re phi, Im phi)."""
    from .io import write_table
    values = np.asarray(values, complex)
    if len(axes) == 1:
        cols = {"x2": axes[0]}
    else:
        g2, g3 = np.meshgrid(axes[0], axes[1], indexing="ij")
        cols = {"x2": g2.ravel(), "x3": g3.ravel()}
    cols["re_phi"] = values.real.ravel()
    cols["im_phi"] = values.imag.ravel()
    write_table(path, cols, delimiter=delimiter)


def read_profile(path, radius=None, delimiter=None):
    """Sampled profile from a table on a rectilinear grid, bilinearly interpolated."""
    from .io import read_table
    cols = read_table(path, delimiter=delimiter)
    re, im = cols["re_phi"], cols["im_phi"]
    if "x3" in cols:
        a2, a3 = np.unique(cols["x2"]), np.unique(cols["x3"])
        if a2.size * a3.size != re.size:
            raise ValueError("profile samples do not form a rectilinear grid")
        order = np.lexsort((cols["x3"], cols["x2"]))
        vals = (re[order] + 1j * im[order]).reshape(a2.size, a3.size)
        ir = RegularGridInterpolator((a2, a3), vals.real, bounds_error=False, fill_value=0.0)
        ii = RegularGridInterpolator((a2, a3), vals.imag, bounds_error=False, fill_value=0.0)

        def func(y2, y3):
            pts = np.stack(np.broadcast_arrays(np.asarray(y2, float), np.asarray(y3, float)), -1)
            return ir(pts) + 1j * ii(pts)

        c = (0.5 * (a2[0] + a2[-1]), 0.5 * (a3[0] + a3[-1]))
        R = radius if radius is not None else 0.5 * max(a2[-1] - a2[0], a3[-1] - a3[0])
        return TransverseProfile(func=func, dim=2, radius=R, center=c, name=str(path))
    order = np.argsort(cols["x2"])
    a2 = cols["x2"][order]
    vals = re[order] + 1j * im[order]

    def func1(y2):
        y2 = np.asarray(y2, float)
        return (np.interp(y2, a2, vals.real, left=0.0, right=0.0)
                + 1j * np.interp(y2, a2, vals.imag, left=0.0, right=0.0))

    R = radius if radius is not None else 0.5 * (a2[-1] - a2[0])
    return TransverseProfile(func=func1, dim=1, radius=R, center=(0.5 * (a2[0] + a2[-1]),), name=str(path))


# full field ----------------------------------------------------------------
def u_tr(params, longitudinal, profile, x, t, s=0.0, nodes=200, tol=1e-7):
    """Soliton field built from the transverse profile evolved from s to t.

    ``longitudinal`` is an :class:`~gpsemi.oscillator.OscillatorClosedForm`
    supplying the normal-axis data (axis 0).  The evolved profile enters as
    +hbar arg(phi) in the phase and -hbar ln|phi| in the sech argument; zeros
    of phi give zero field.
    """
    cf = longitudinal
    x = np.asarray(x, float)
    d = params.dim
    if x.shape[-1] != d + 1:
        raise ValueError(f"points must have trailing dimension {d + 1}")
    if cf.dim < 1:
        raise ValueError("longitudinal data missing")
    cf._check_caustic(t)
    hb = params.hbar
    if abs(cf.hbar - hb) > 1e-15 * hb or abs(cf.m - params.m) > 1e-15 * params.m:
        raise ValueError("hbar and m must agree between longitudinal and transverse data")
    w0, plus = cf.omega[0], cf.plus[0]
    P, X = cf.closed_trajectory(t)
    dx0 = x[..., 0] - X[0]
    zt = np.cos(w0 * t) if plus else np.cosh(w0 * t)
    z = -np.tan(w0 * t) if plus else np.tanh(w0 * t)
    amp = abs(cf.pi0) / (np.sqrt(cf.m) * abs(cf.g) * abs(zt))
    S = cf.closed_action(t) + 0.5 * cf.m * w0 * z * dx0 ** 2 + dx0 * P[0]
    sigma = cf.pi0 * dx0 / zt - 0.5 * hb * np.log(abs(zt))
    ev = evolve_profile(params, profile, t, s, nodes=nodes, tol=tol)
    flat = x[..., 1:].reshape(-1, d)
    uniq, inv = np.unique(flat, axis=0, return_inverse=True)
    phi = np.asarray(ev(*[uniq[:, j] for j in range(d)]), complex)[np.ravel(inv)].reshape(x.shape[:-1])
    return kernels.sech_envelope(amp, S / hb, sigma / hb, phi)
