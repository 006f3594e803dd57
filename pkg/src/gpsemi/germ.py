"""Trajectory and complex-germ dynamics.

The state carries the vertex momentum ``P``, position ``X``, surface normal
``pi``, the germ matrices ``B = (W_1..W_n)`` and ``C = (Z_1..Z_n)``, the
accumulated action ``S0`` and a continuous branch of ``log det C``.  The
flow is

    P'  = -Hx + Q2 Hpp pi          X' = Hp
    pi' = -(Hxp + Q1 Hpp) pi
    C'  = Hpx C + Hpp B            B' = -Hxx C - Hxp B
    S0' = <P, X'> - H + <pi, Hpp pi>/2
    (log det C)' = tr(C' C^-1)

with Q = B C^-1 = Q1 + i Q2.  By convention the mode attached to the
surface normal (zero eigenvalue of D0) is the last column.
"""
from dataclasses import dataclass, field, replace
import math

import numpy as np

from .model import derivative_blocks, eval_symbol

__all__ = [
    "CausticError",
    "BranchGuardError",
    "DegenerateGermError",
    "NegativeNormError",
    "GermVector",
    "GermState",
    "GermTrajectory",
    "RankReport",
    "rhs",
    "integrate",
    "q_matrix",
    "skew_product",
    "d0_matrix",
    "normalize_germ",
    "check_rank_conditions",
    "oscillator_initial_state",
    "state_from_q",
    "invariant_report",
]

COND_MAX = 1e12


class CausticError(RuntimeError):
    """det C(t) vanished (or C became numerically singular)."""

    def __init__(self, t, cond, msg=None):
        self.t = float(t)
        self.cond = float(cond)
        super().__init__(msg or f"caustic at t={self.t:.12g} (cond(C)={self.cond:.3e})")


class BranchGuardError(CausticError):
    """The log det C continuity guard kept failing down to the minimum step."""


class DegenerateGermError(ValueError):
    pass


class NegativeNormError(ValueError):
    pass


@dataclass(frozen=True)
class GermVector:
    """Germ column a = (W, Z): momentum part W, coordinate part Z."""

    W: np.ndarray
    Z: np.ndarray

    def conj(self):
        return GermVector(np.conj(self.W), np.conj(self.Z))

    def as_column(self):
        return np.concatenate([self.W, self.Z])


@dataclass(frozen=True)
class GermState:
    t: float
    P: np.ndarray
    X: np.ndarray
    pi: np.ndarray
    B: np.ndarray
    C: np.ndarray
    S0: float = 0.0
    logdetC: complex = 0j

    @property
    def dim(self):
        return self.P.size

    @property
    def basis(self):
        return [GermVector(self.B[:, j].copy(), self.C[:, j].copy()) for j in range(self.dim)]

    def with_basis(self, basis):
        B = np.column_stack([a.W for a in basis]).astype(complex)
        C = np.column_stack([a.Z for a in basis]).astype(complex)
        return replace(self, B=B, C=C, logdetC=complex(np.log(complex(np.linalg.det(C)))))

    # packing used by the integrator
    def pack(self):
        return np.concatenate([
            self.P.astype(complex), self.X.astype(complex), self.pi.astype(complex),
            self.B.ravel(), self.C.ravel(), [self.S0, self.logdetC],
        ])

    @classmethod
    def unpack(cls, t, y, n):
        i = 0
        P = y[i:i + n].real.copy(); i += n
        X = y[i:i + n].real.copy(); i += n
        pi = y[i:i + n].real.copy(); i += n
        B = y[i:i + n * n].reshape(n, n).copy(); i += n * n
        C = y[i:i + n * n].reshape(n, n).copy(); i += n * n
        return cls(t=float(t), P=P, X=X, pi=pi, B=B, C=C, S0=float(y[i].real), logdetC=complex(y[i + 1]))


def _norm1(a):
    return float(np.abs(a).sum(axis=0).max())


def _inverse(C, t):
    # 1-norm condition number from the explicit inverse (cheaper than an SVD)
    try:
        Cinv = np.linalg.inv(C)
    except np.linalg.LinAlgError:
        raise CausticError(t, np.inf) from None
    cond = _norm1(C) * _norm1(Cinv)
    if not np.isfinite(cond) or cond > COND_MAX:
        raise CausticError(t, cond if np.isfinite(cond) else np.inf)
    return Cinv, cond


def _solve_q(B, C, t):
    Cinv, cond = _inverse(C, t)
    return B @ Cinv, cond


def q_matrix(state):
    """Q = B C^-1 (complex); Q1 = Q.real, Q2 = Q.imag."""
    return _solve_q(state.B, state.C, state.t)[0]


def skew_product(a, b):
    """Bilinear skew product {a, b} = <W_a, Z_b> - <Z_a, W_b>.

    No conjugation is applied; pass ``b.conj()`` for {a, b*}.  With this
    sign the oscillator modes with Im Q > 0 satisfy {a, a*} = 2i d.
    """
    if a.W.shape != b.W.shape:
        raise ValueError("germ vectors of different dimension")
    return complex(a.W @ b.Z - a.Z @ b.W)


def d0_matrix(state):
    """D0 = (C^H B - B^H C) / 2i, Hermitian and conserved by the flow."""
    C, B = state.C, state.B
    d = (C.conj().T @ B - B.conj().T @ C) / 2j
    return 0.5 * (d + d.conj().T)


def rhs(model, state):
    """Time derivative of every state component, returned as a GermState."""
    t = state.t
    Cinv, _ = _inverse(state.C, t)
    Q = state.B @ Cinv
    Q1, Q2 = Q.real, Q.imag
    blk = derivative_blocks(model, state.P, state.X, t)
    Hpp = blk.Hpp
    Pdot = -blk.Hx + Q2 @ Hpp @ state.pi
    Xdot = blk.Hp
    pidot = -(blk.Hxp + Q1 @ Hpp) @ state.pi
    Cdot = blk.Hpx @ state.C + Hpp @ state.B
    Bdot = -blk.Hxx @ state.C - blk.Hxp @ state.B
    H = eval_symbol(model, state.P, state.X, t)
    S0dot = float(state.P @ Xdot) - H + 0.5 * float(state.pi @ Hpp @ state.pi)
    ldot = complex(np.einsum("ij,ji->", Cinv, Cdot))
    return GermState(t=t, P=Pdot, X=Xdot, pi=pidot, B=Bdot, C=Cdot, S0=S0dot, logdetC=ldot)


def _f(model, t, y, n):
    return rhs(model, GermState.unpack(t, y, n)).pack()


def _rk4(model, t, y, h, n):
    """Increment of one classical RK4 step."""
    k1 = _f(model, t, y, n)
    k2 = _f(model, t + 0.5 * h, y + 0.5 * h * k1, n)
    k3 = _f(model, t + 0.5 * h, y + 0.5 * h * k2, n)
    k4 = _f(model, t + h, y + h * k3, n)
    return (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _detC(y, n):
    off = 3 * n + n * n
    return complex(np.linalg.det(y[off:off + n * n].reshape(n, n)))


@dataclass
class GermTrajectory:
    """Germ states at the integrator output times, with cubic Hermite interpolation."""

    model: object
    times: np.ndarray
    states: list
    rates: list
    error_estimates: np.ndarray
    step: float
    meta: dict = field(default_factory=dict)

    @property
    def t0(self):
        return float(self.times[0])

    @property
    def t_end(self):
        return float(self.times[-1])

    @property
    def dim(self):
        return self.states[0].dim

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i]

    def state_at(self, t):
        t = float(t)
        times = self.times
        scale = 1e-11 * max(1.0, abs(t), self.step)
        if t < times[0] - scale or t > times[-1] + scale:
            raise ValueError(f"t={t} outside trajectory range [{times[0]}, {times[-1]}]")
        i = int(np.searchsorted(times, t))
        for j in (i - 1, i):
            if 0 <= j < len(times) and abs(times[j] - t) <= scale:
                return self.states[j]
        i = min(max(i, 1), len(times) - 1)
        ta, tb = times[i - 1], times[i]
        h = tb - ta
        s = (t - ta) / h
        ya, yb = self.states[i - 1].pack(), self.states[i].pack()
        fa, fb = self.rates[i - 1].pack(), self.rates[i].pack()
        h00 = 2 * s ** 3 - 3 * s ** 2 + 1
        h10 = s ** 3 - 2 * s ** 2 + s
        h01 = -2 * s ** 3 + 3 * s ** 2
        h11 = s ** 3 - s ** 2
        y = h00 * ya + h10 * h * fa + h01 * yb + h11 * h * fb
        return GermState.unpack(t, y, self.dim)


def integrate(model, state0, t_end, step, error_estimate=True, min_step=None, cond_max=COND_MAX):
    """Fixed-step classical RK4 from ``state0.t`` to ``t_end``.

    Steps whose ``log det C`` argument jumps by pi/2 or more (or that make C
    numerically singular) are retried as two half steps, recursively, down to
    ``min_step``; failure there raises :class:`BranchGuardError`.  With
    ``error_estimate`` the Richardson estimate |y_h - y_{h/2}| / 15 is stored
    for every output step.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    t0 = float(state0.t)
    if not t_end > t0:
        raise ValueError("t_end must exceed the initial time")
    if min_step is None:
        min_step = step * 2.0 ** -20
    n = state0.dim
    nsteps = int(math.ceil((t_end - t0) / step - 1e-9))
    grid = t0 + step * np.arange(nsteps + 1)
    grid[-1] = t_end

    def guarded(t, y, h):
        # returns the increment over [t, t + h]
        try:
            dy = _rk4(model, t, y, h, n)
            y_new = y + dy
            ok = np.all(np.isfinite(y_new))
            if ok:
                C_new = y_new[3 * n + n * n:3 * n + 2 * n * n].reshape(n, n)
                cond = _norm1(C_new) * _norm1(np.linalg.inv(C_new))
                ok = cond <= cond_max
            if ok:
                jump = abs(np.angle(_detC(y_new, n) / _detC(y, n)))
                dl = abs((y_new[-1] - y[-1]).imag)
                ok = jump < 0.5 * np.pi and dl < 0.5 * np.pi
        except (CausticError, np.linalg.LinAlgError):
            ok = False
        if ok:
            return dy
        if 0.5 * h < min_step:
            C = y[3 * n + n * n:3 * n + 2 * n * n].reshape(n, n)
            raise BranchGuardError(t + h, np.linalg.cond(C),
                                   f"caustic near t={t + h:.12g}: log det C branch guard failed at minimum step")
        d1 = guarded(t, y, 0.5 * h)
        return d1 + guarded(t + 0.5 * h, y + d1, 0.5 * h)

    y = state0.pack()
    comp = np.zeros_like(y)
    states = [GermState.unpack(t0, y, n)]
    rates = [rhs(model, states[0])]
    errs = [0.0]
    for k in range(nsteps):
        t, h = grid[k], grid[k + 1] - grid[k]
        dy = guarded(t, y, h)
        if error_estimate:
            d1 = guarded(t, y, 0.5 * h)
            d2 = guarded(t + 0.5 * h, y + d1, 0.5 * h)
            errs.append(float(np.max(np.abs(d1 + d2 - dy))) / 15.0)
        else:
            errs.append(np.nan)
        # compensated (Kahan) accumulation keeps long runs at roundoff level
        dy = dy - comp
        y_new = y + dy
        comp = (y_new - y) - dy
        y = y_new
        st = GermState.unpack(grid[k + 1], y, n)
        states.append(st)
        rates.append(rhs(model, st))
    meta = {"step": float(step), "t0": t0, "t_end": float(t_end), "cond_max": cond_max,
            "min_step": float(min_step), "method": "rk4"}
    return GermTrajectory(model=model, times=grid, states=states, rates=rates,
                          error_estimates=np.asarray(errs), step=float(step), meta=meta)


def normalize_germ(basis, hbar, pi=None, tol=1e-10):
    """Bring D0 to diag(d_1, ..., d_{n-1}, 0) and return the ladder normalizers.

    Returns ``(basis, N)`` with N_j = (2 hbar d_j)^{-1/2} for the first n-1
    modes and N_n = 1 for the normal mode.  When ``pi`` is given the normal
    mode is rescaled so that <Z_n, pi> = 1, which makes the shifted operator
    a_n - i annihilate the vacuum.
    """
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    n = len(basis)
    B = np.column_stack([a.W for a in basis]).astype(complex)
    C = np.column_stack([a.Z for a in basis]).astype(complex)
    D0 = (C.conj().T @ B - B.conj().T @ C) / 2j
    D0 = 0.5 * (D0 + D0.conj().T)
    scale = max(1.0, float(np.max(np.abs(D0))))
    offdiag = D0 - np.diag(np.diag(D0))
    if np.max(np.abs(offdiag), initial=0.0) <= tol * scale:
        d = np.diag(D0).real
        U = np.eye(n, dtype=complex)
    else:
        d, U = np.linalg.eigh(D0)
    zero = np.flatnonzero(np.abs(d) <= tol * scale)
    if zero.size != 1:
        raise DegenerateGermError(f"D0 has {zero.size} zero eigenvalues (need exactly one): {d}")
    if np.any(d < -tol * scale):
        raise NegativeNormError(f"D0 has negative eigenvalues: {d}")
    order = [j for j in range(n) if j != zero[0]] + [int(zero[0])]
    U = U[:, order]
    d = d[order]
    B, C = B @ U, C @ U
    if pi is not None:
        c = complex(C[:, -1] @ np.asarray(pi, float))
        if abs(c) < tol:
            raise DegenerateGermError("normal mode is orthogonal to pi")
        B[:, -1] /= c
        C[:, -1] /= c
    N = np.ones(n)
    N[:-1] = 1.0 / np.sqrt(2.0 * hbar * d[:-1])
    return [GermVector(B[:, j], C[:, j]) for j in range(n)], N


@dataclass(frozen=True)
class RankReport:
    rank_q2: int
    rank_augmented: int
    n: int
    singular_q2: np.ndarray
    singular_augmented: np.ndarray

    @property
    def q2_ok(self):
        return self.rank_q2 == self.n - 1

    @property
    def augmented_ok(self):
        return self.rank_augmented == self.n

    @property
    def ok(self):
        return self.q2_ok and self.augmented_ok

    def __bool__(self):
        return self.ok


def _rank(mat, tol):
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0, s
    return int(np.sum(s > tol * s[0])), s


def check_rank_conditions(state, tol=1e-8):
    """rank Q2 = n - 1 and rank (Q2 | pi) = n."""
    Q2 = q_matrix(state).imag
    n = state.dim
    r1, s1 = _rank(Q2, tol)
    r2, s2 = _rank(np.column_stack([Q2, state.pi]), tol)
    return RankReport(rank_q2=r1, rank_augmented=r2, n=n, singular_q2=s1, singular_augmented=s2)


def oscillator_initial_state(k, m=1.0, pi0=1.0, P0=None, X0=None, t0=0.0):
    """Normalized germ for the diagonal oscillator with the normal along axis 0.

    Transverse axes j >= 1 start from Q_jj = i m Omega_j with d_j = 1; the
    normal mode is real, Z = e_0 / pi0, W = 0 (so Q1 = 0 at t0 and
    <Z_n, pi> = 1).  Requires k_j != 0 on every transverse axis.
    """
    k = np.atleast_1d(np.asarray(k, float))
    n = k.size
    omega = np.sqrt(np.abs(k) / m)
    if n > 1 and np.any(omega[1:] == 0):
        raise ValueError("transverse stiffness must be nonzero")
    B = np.zeros((n, n), complex)
    C = np.zeros((n, n), complex)
    for col, j in enumerate(range(1, n)):
        C[j, col] = 1.0 / math.sqrt(m * omega[j])
        B[j, col] = 1j * math.sqrt(m * omega[j])
    C[0, n - 1] = 1.0 / pi0
    pi = np.zeros(n)
    pi[0] = pi0
    P = np.zeros(n) if P0 is None else np.asarray(P0, float)
    X = np.zeros(n) if X0 is None else np.asarray(X0, float)
    return GermState(t=float(t0), P=P, X=X, pi=pi, B=B, C=C, S0=0.0,
                     logdetC=complex(np.log(complex(np.linalg.det(C)))))


def state_from_q(P0, X0, pi, Q0, hbar=1.0, t0=0.0, tol=1e-10):
    """Germ state whose initial Q equals the complex symmetric ``Q0``.

    C is built from the eigenvectors of Im Q0 so that D0 is diagonal; the
    result is passed through :func:`normalize_germ` (normal mode last,
    <Z_n, pi> = 1).
    """
    Q0 = np.asarray(Q0, complex)
    if np.max(np.abs(Q0 - Q0.T)) > tol * max(1.0, np.max(np.abs(Q0))):
        raise ValueError("Q0 must be symmetric")
    pi = np.asarray(pi, float)
    _, U = np.linalg.eigh(Q0.imag)
    C = U.astype(complex)
    B = Q0 @ C
    basis = [GermVector(B[:, j], C[:, j]) for j in range(pi.size)]
    basis, _ = normalize_germ(basis, hbar, pi=pi, tol=tol)
    st = GermState(t=float(t0), P=np.asarray(P0, float), X=np.asarray(X0, float), pi=pi,
                   B=np.zeros((pi.size, pi.size), complex), C=np.eye(pi.size, dtype=complex))
    return st.with_basis(basis)


def invariant_report(traj):
    """Drifts of the conserved quantities along a trajectory."""
    s0 = traj.states[0]
    D0_0 = d0_matrix(s0)
    basis0 = s0.basis
    n = s0.dim
    skew0 = np.array([[skew_product(basis0[j], basis0[k]) for k in range(n)] for j in range(n)])
    skewc0 = np.array([[skew_product(basis0[j], basis0[k].conj()) for k in range(n)] for j in range(n)])
    d0_drift = sym = skew_drift = 0.0
    min_imq = np.inf
    for st in traj.states:
        d0_drift = max(d0_drift, float(np.max(np.abs(d0_matrix(st) - D0_0))))
        Q = q_matrix(st)
        sym = max(sym, float(np.max(np.abs(Q - Q.T))))
        min_imq = min(min_imq, float(np.min(np.linalg.eigvalsh(0.5 * (Q.imag + Q.imag.T)))))
        b = st.basis
        sk = np.array([[skew_product(b[j], b[k]) for k in range(n)] for j in range(n)])
        skc = np.array([[skew_product(b[j], b[k].conj()) for k in range(n)] for j in range(n)])
        skew_drift = max(skew_drift, float(np.max(np.abs(sk - skew0))),
                         float(np.max(np.abs(skc - skewc0))))
    return {"d0_drift": d0_drift, "q_asymmetry": sym, "skew_drift": skew_drift, "min_eig_im_q": min_imq}
