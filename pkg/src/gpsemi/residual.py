"""Finite-difference residual oracle for the focusing GPE.

    L Psi = [-i hbar d/dt + H(p, x, t) - g^2 |Psi|^2] Psi,   p = -i hbar grad

The Weyl-ordered symbol is applied with second-order central stencils; the
first-order term is symmetrized as hvec . (-i hbar grad Psi)
- (i hbar / 2)(div hvec) Psi.  Norms are taken over the tube
|x - X(t)| <= c sqrt(hbar) around the trajectory vertex.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from .field import vacuum_phases
from .germ import GermVector, q_matrix

__all__ = [
    "StencilError",
    "UnderResolvedError",
    "MismatchError",
    "FieldSampler",
    "ResidualReport",
    "apply_gpe",
    "tube_points",
    "tube_residual",
    "hbar_scaling_study",
    "one_soliton",
    "soliton_parameter_map",
    "fit_soliton_center",
    "linear_vacuum",
    "lowering",
    "raising",
    "annihilation_check",
    "commutator_check",
    "compare_fields",
]


class StencilError(ValueError):
    """A stencil point falls outside the sampler's domain."""


class UnderResolvedError(RuntimeError):
    """Halving the finite-difference step changed the result too much."""


class MismatchError(RuntimeError):
    """The identified soliton parameters do not reproduce the field."""


@dataclass
class FieldSampler:
    """Time-evaluable field: ``evaluator(x, t)`` with x of shape (..., dim)."""

    evaluator: Callable
    dim: int
    box: Optional[tuple] = None
    dx: Optional[float] = None
    dt: Optional[float] = None

    def __call__(self, x, t):
        x = np.asarray(x, float)
        if self.box is not None:
            lo, hi = (np.asarray(b, float) for b in self.box)
            if np.any(x < lo - 1e-12) or np.any(x > hi + 1e-12):
                raise StencilError("stencil point outside the sampler domain")
        return np.asarray(self.evaluator(x, t), complex)


def apply_gpe(model, field, g, hbar, points, t, dt, dx):
    """Residual L Psi at ``points`` (shape (N, dim))."""
    pts = np.asarray(points, float)
    if pts.ndim != 2 or pts.shape[1] != model.dim:
        raise ValueError(f"points must have shape (N, {model.dim})")
    if not (dt > 0 and dx > 0):
        raise ValueError("dt and dx must be positive")
    n = model.dim
    psi = field(pts, t)
    dpsi_t = (field(pts, t + dt) - field(pts, t - dt)) / (2.0 * dt)
    hpp = np.asarray(model.hpp(t), float)
    E = np.eye(n) * dx
    plus = [field(pts + E[i], t) for i in range(n)]
    minus = [field(pts - E[i], t) for i in range(n)]
    grad = np.stack([(plus[i] - minus[i]) / (2.0 * dx) for i in range(n)], -1)
    kin = np.zeros_like(psi)
    for i in range(n):
        if hpp[i, i] != 0.0:
            kin += hpp[i, i] * (plus[i] - 2.0 * psi + minus[i]) / dx ** 2
        for j in range(i + 1, n):
            if hpp[i, j] != 0.0:
                mixed = (field(pts + E[i] + E[j], t) - field(pts + E[i] - E[j], t)
                         - field(pts - E[i] + E[j], t) + field(pts - E[i] - E[j], t)) / (4.0 * dx ** 2)
                kin += 2.0 * hpp[i, j] * mixed
    out = -1j * hbar * dpsi_t - 0.5 * hbar ** 2 * kin
    hv = np.array([model.hvec(x, t) for x in pts], float)
    if np.any(hv != 0.0):
        div = np.array([np.trace(np.asarray(model.hvec_x(x, t), float)) for x in pts])
        out += np.einsum("ij,ij->i", hv, -1j * hbar * grad) - 0.5j * hbar * div * psi
    h0 = np.array([model.h0(x, t) for x in pts], float)
    out += h0 * psi - g ** 2 * np.abs(psi) ** 2 * psi
    return out


def tube_points(center, radius, spacing):
    """Grid points inside the ball |x - center| <= radius; ``spacing`` per axis."""
    center = np.asarray(center, float)
    spacing = np.broadcast_to(np.asarray(spacing, float), center.shape)
    axes = []
    for c, h in zip(center, spacing):
        k = int(np.floor(radius / h))
        axes.append(c + h * np.arange(-k, k + 1))
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, center.size)
    keep = np.sum((mesh - center) ** 2, axis=1) <= radius ** 2 * (1 + 1e-12)
    return mesh[keep]


@dataclass
class ResidualReport:
    hbars: list
    c: float
    t: float
    dx: list
    dt: list
    max_residual: list
    rms_residual: list
    rms_field: list
    relative: list
    relative_half_dx: list = field(default_factory=list)
    slope: Optional[float] = None
    grid: dict = field(default_factory=dict)

    @property
    def dx_change(self):
        if not self.relative_half_dx:
            return []
        return [abs(a - b) / b for a, b in zip(self.relative, self.relative_half_dx)]

    def as_dict(self):
        return {
            "hbars": list(self.hbars), "c": self.c, "t": self.t, "dx": list(self.dx), "dt": list(self.dt),
            "max_residual": list(self.max_residual), "rms_residual": list(self.rms_residual),
            "rms_field": list(self.rms_field), "relative": list(self.relative),
            "relative_half_dx": list(self.relative_half_dx), "dx_change": self.dx_change,
            "slope": self.slope, "grid": self.grid,
        }


def tube_residual(model, field, g, hbar, center, t, dt, dx, c=3.0, spacing=None):
    """(max |L Psi|, rms |L Psi|, rms |Psi|) over the tube around ``center``."""
    center = np.asarray(center, float)
    if spacing is None:
        spacing = np.full(center.size, np.sqrt(hbar) / 8.0)
    pts = tube_points(center, c * np.sqrt(hbar), spacing)
    res = apply_gpe(model, field, g, hbar, pts, t, dt, dx)
    psi = field(pts, t)
    return (float(np.max(np.abs(res))), float(np.sqrt(np.mean(np.abs(res) ** 2))),
            float(np.sqrt(np.mean(np.abs(psi) ** 2))), pts.shape[0])


def hbar_scaling_study(model, family, g, hbars, c=3.0, t=0.5, dx_rule=None, dt=None,
                       spacing_rule=None, check_dx=True, strict=False, max_change=0.1):
    """Relative tube residual r(hbar) and its least-squares log-log slope.

    ``family(hbar)`` returns ``(sampler, center)`` where ``center`` is the
    vertex X(t).  ``dx_rule(hbar)`` gives the stencil step (default hbar/40);
    ``spacing_rule(hbar)`` gives the per-axis sampling spacing of the tube
    (default hbar/4 along axis 0, sqrt(hbar)/8 across).  With ``check_dx``
    every r is recomputed at dx/2; ``strict`` raises when it moves by more
    than ``max_change``.
    """
    hbars = [float(h) for h in hbars]
    dx_rule = dx_rule or (lambda h: h / 40.0)
    n = model.dim

    def default_spacing(h):
        s = np.full(n, np.sqrt(h) / 8.0)
        s[0] = h / 4.0
        return s

    spacing_rule = spacing_rule or default_spacing
    rep = ResidualReport(hbars=hbars, c=c, t=t, dx=[], dt=[], max_residual=[], rms_residual=[],
                         rms_field=[], relative=[])
    for h in hbars:
        sampler, center = family(h)
        dx = dx_rule(h)
        step_t = dt if dt is not None else 1e-4 * 2.0 * np.pi
        mx, rms, fn, npts = tube_residual(model, sampler, g, h, center, t, step_t, dx, c, spacing_rule(h))
        rep.dx.append(dx)
        rep.dt.append(step_t)
        rep.max_residual.append(mx)
        rep.rms_residual.append(rms)
        rep.rms_field.append(fn)
        rep.relative.append(rms / fn)
        rep.grid[str(h)] = {"points": npts, "spacing": [float(v) for v in spacing_rule(h)]}
        if check_dx:
            _, rms2, fn2, _ = tube_residual(model, sampler, g, h, center, t, step_t, 0.5 * dx, c,
                                            spacing_rule(h))
            rep.relative_half_dx.append(rms2 / fn2)
    if len(hbars) >= 3:
        rep.slope = float(np.polyfit(np.log(hbars), np.log(rep.relative), 1)[0])
    if strict and check_dx and any(ch > max_change for ch in rep.dx_change):
        raise UnderResolvedError(f"dx halving changed r by {max(rep.dx_change):.3g}")
    return rep


# exact 1D soliton ----------------------------------------------------------
def one_soliton(x, t, xi, eta, x0, phi0, g=1.0, hbar=1.0):
    """Exact one-soliton of i hbar Psi_t + hbar^2/2 Psi_xx + g^2 |Psi|^2 Psi = 0."""
    x = np.asarray(x, float)
    arg = 2.0 * eta * (x - x0 - 2.0 * xi * t) / hbar
    e = np.exp(-np.abs(arg))
    sech = 2.0 * e / (1.0 + e * e)
    phase = (2.0 * xi * x - 2.0 * (xi ** 2 - eta ** 2) * t + phi0) / hbar
    return -(2.0 * eta / g) * sech * np.exp(1j * phase)


def soliton_parameter_map(pi0, P, X0, hbar=1.0, N0=0j, m=1.0, check=None, tol=1e-10):
    """(xi, eta, x0, phi0) under which the 1D free-model field is the exact soliton.

    eta = pi0/2, xi = P/2, x0 = X0 and phi0 = -2 xi X0 + hbar Im N0 - pi hbar
    (the leading minus sign of the soliton is the pi hbar shift); requires
    m = 1 and Re N0 = ln(pi0) for the amplitudes to agree.  When ``check`` is
    ``(field, xs, ts)`` the map is verified pointwise and :class:`MismatchError`
    raised above ``tol`` (relative to the peak).
    """
    if m != 1.0:
        raise ValueError("the soliton identity holds for m = 1")
    xi = 0.5 * float(P)
    eta = 0.5 * float(pi0)
    x0 = float(X0)
    phi0 = -2.0 * xi * x0 + hbar * complex(N0).imag - np.pi * hbar
    if check is not None:
        fld, xs, ts, g = check
        dev = 0.0
        for t in ts:
            a = fld(np.asarray(xs, float)[:, None], t)
            b = one_soliton(xs, t, xi, eta, x0, phi0, g, hbar)
            dev = max(dev, float(np.max(np.abs(a - b))) / float(np.max(np.abs(b))))
        if dev > tol:
            raise MismatchError(f"soliton map deviates by {dev:.3e}")
    return xi, eta, x0, phi0


def fit_soliton_center(field, t, bracket, tol=1e-12, h=1e-4):
    """Location of max |Psi| on a 1D bracket.

    A bounded scalar search locates the peak to about sqrt(eps); the root of
    the central-difference slope of ln|Psi| then refines it to ``tol``.
    """
    logmod = lambda x: np.log(abs(complex(field(np.array([[x]]), t)[0])))  # noqa: E731
    res = optimize.minimize_scalar(lambda x: -logmod(x), bounds=bracket, method="bounded",
                                   options={"xatol": 1e-9})
    x = float(res.x)
    slope = lambda y: logmod(y + h) - logmod(y - h)  # noqa: E731
    for w in (1e-6, 1e-4, 1e-2):
        lo, hi = max(bracket[0], x - w), min(bracket[1], x + w)
        if slope(lo) > 0 > slope(hi):
            return float(optimize.brentq(slope, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps))
    return x


# ladder operators on callables ----------------------------------------------
def linear_vacuum(trajectory, hbar, N0=0j):
    """psi0(x, t) = exp[(i S0 - sigma0) / hbar] of the linear associated problem."""

    def psi(x, t):
        S, sig = vacuum_phases(trajectory, t, x, hbar, N0)
        return np.exp((1j * S - sig) / hbar)

    return psi


def _grad(f, x, h):
    n = x.shape[-1]
    out = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        out.append((f(x + e) - f(x - e)) / (2.0 * h))
    return np.stack(out, -1)


def lowering(vec, N, P, X, hbar, h=1e-4):
    """a = N [<Z, Dp> - <W, Dx>] as a map on callables f(x); Dp = -i hbar grad - P."""

    def op(f):
        def g(x):
            x = np.asarray(x, float)
            dp = -1j * hbar * _grad(f, x, h) - np.multiply.outer(f(x), P)
            return N * (dp @ vec.Z - ((x - X) @ vec.W) * f(x))
        return g

    return op


def raising(vec, N, P, X, hbar, h=1e-4):
    """a^+ = N [<conj Z, Dp> - <conj W, Dx>]."""
    return lowering(GermVector(np.conj(vec.W), np.conj(vec.Z)), N, P, X, hbar, h)


def _ratio(a, b):
    return float(np.sqrt(np.sum(np.abs(a) ** 2) / np.sum(np.abs(b) ** 2)))


def annihilation_check(fld, t, points, h=1e-4, basis=None):
    """Relative defects |a_j psi0| / |psi0| per transverse mode and |(a_n - i) psi0|.

    ``fld`` is a :class:`~gpsemi.field.SolitonField` (its trajectory, hbar and
    N0 define psi0).  ``basis`` overrides the normalized germ, e.g. to test a
    perturbed one.
    """
    state = fld.trajectory.state_at(t)
    hb = fld.hbar
    basis = basis if basis is not None else fld.normalized_basis(state)
    N = fld.normalizers
    vac = linear_vacuum(fld.trajectory, hb, fld.phase.N0)
    f = lambda x: vac(x, t)  # noqa: E731
    pts = np.asarray(points, float)
    ref = f(pts)
    out = {}
    n = state.dim
    for j in range(n - 1):
        out[f"a{j + 1}"] = _ratio(lowering(basis[j], N[j], state.P, state.X, hb, h)(f)(pts), ref)
    an = lowering(basis[n - 1], 1.0, state.P, state.X, hb, h)(f)(pts)
    out["a_pi_shifted"] = _ratio(an - 1j * ref, ref)
    return out


def commutator_check(fld, t, points, max_order=2, h=1e-4):
    """max over ladder states |nu| <= max_order of |([a_j, a_k^+] - delta_jk) psi| / |psi|."""
    from itertools import product
    from .ladder import excited_polynomial

    state = fld.trajectory.state_at(t)
    hb = fld.hbar
    basis = fld.normalized_basis(state)
    N = fld.normalizers
    Q = q_matrix(state)
    n = state.dim
    vac = linear_vacuum(fld.trajectory, hb, fld.phase.N0)
    pts = np.asarray(points, float)
    worst = 0.0
    for nu in product(range(max_order + 1), repeat=n - 1):
        if sum(nu) > max_order:
            continue
        poly = excited_polynomial(basis, Q, nu, hb, N)
        f = lambda x, poly=poly: poly(np.asarray(x) - state.X) * vac(x, t)  # noqa: E731
        ref = f(pts)
        for j in range(n - 1):
            lo = lowering(basis[j], N[j], state.P, state.X, hb, h)
            for k in range(n - 1):
                up = raising(basis[k], N[k], state.P, state.X, hb, h)
                comm = lo(up(f))(pts) - up(lo(f))(pts)
                target = ref if j == k else 0.0 * ref
                worst = max(worst, _ratio(comm - target, ref))
    return worst


def compare_fields(a, b, points, t, floor=1e-8):
    """Pointwise deviation of two samplers; relative part only where |b| > floor max|b|."""
    pts = np.asarray(points, float)
    va, vb = a(pts, t), b(pts, t)
    diff = np.abs(va - vb)
    mb = np.abs(vb)
    mask = mb > floor * float(np.max(mb, initial=0.0))
    rel = float(np.max(diff[mask] / mb[mask])) if np.any(mask) else 0.0
    return {"max_abs": float(np.max(diff, initial=0.0)), "max_rel": rel,
            "points": int(pts.shape[0]), "compared": int(np.count_nonzero(mask))}
