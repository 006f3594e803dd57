"""Acceptance suites.

Each ``criterion_k`` runs one end-to-end check at its fixed tolerance and
returns a :class:`CriterionResult`; :func:`run_suites` runs a selection.
The CLI ``validate`` command and the acceptance tests share these.
"""
import time
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .field import PhaseAssembly, SolitonField
from .germ import (GermState, check_rank_conditions, integrate, invariant_report, oscillator_initial_state,
                   q_matrix)
from .model import free_model, oscillator_model
from .oscillator import (OscillatorClosedForm, closed_form_normalization, modulus_hill, modulus_hill21,
                         modulus_well, modulus_well21)
from .residual import (FieldSampler, annihilation_check, apply_gpe, commutator_check, hbar_scaling_study,
                       one_soliton, soliton_parameter_map, tube_points)
from .transverse import (TransverseKernelParams, TransverseProfile, builtin_profile, evolve_profile, mehler,
                         mehler_series, profile_norm, series_apply, u_tr)

__all__ = ["CriterionResult", "CRITERIA", "run_suites"] + [f"criterion_{k}" for k in range(1, 10)]


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    runtime: float = 0.0
    budget: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        failed = [k for k, v in self.checks.items() if not v]
        extra = f" (failed: {', '.join(failed)})" if failed else ""
        return f"[{status}] {self.number}. {self.name}: {self.runtime:.2f}s / {self.budget:.0f}s{extra}"

    def as_dict(self):
        return {"number": self.number, "name": self.name, "passed": self.passed, "runtime": self.runtime,
                "budget": self.budget, "checks": dict(self.checks), "metrics": _plain(self.metrics)}


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _finish(number, name, budget, t0, checks, metrics):
    rt = time.perf_counter() - t0
    checks = {k: bool(v) for k, v in checks.items()}
    checks["runtime"] = rt < budget
    return CriterionResult(number, name, all(checks.values()), metrics, checks, rt, budget)


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b))) / max(float(np.max(np.abs(b))), 1e-300)


def _cube(center, half, count):
    axes = [c + np.linspace(-half, half, count) for c in center]
    return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, len(center))


def _rel_floor(a, b, floor=1e-8):
    mb = np.abs(b)
    mask = mb > floor * mb.max()
    return float(np.max(np.abs(a - b)[mask] / mb[mask]))


def criterion_1():
    """Exact one-soliton reproduced by the 1D free-model class member."""
    t0 = time.perf_counter()
    eta, xi, hb, g, x0 = 0.5, 0.3, 1.0, 1.0, 0.0
    pi0, P = 2 * eta, 2 * xi
    N0 = complex(np.log(pi0), 0.0)
    st = GermState(t=0.0, P=np.array([P]), X=np.array([x0]), pi=np.array([pi0]),
                   B=np.zeros((1, 1), complex), C=np.array([[1.0 / pi0 + 0j]]), logdetC=complex(np.log(1.0 / pi0)))
    tr = integrate(free_model(1), st, 1.0, 1e-3, error_estimate=False)
    fld = SolitonField(tr, PhaseAssembly(hb, g, N0))
    xi_m, eta_m, x0_m, phi0 = soliton_parameter_map(pi0, P, x0, hb, N0)
    xs = np.linspace(-10, 10, 2001)
    dev = 0.0
    for t in (0.0, 0.25, 0.5, 1.0):
        dev = max(dev, float(np.max(np.abs(fld.evaluate(t, xs[:, None])
                                           - one_soliton(xs, t, xi_m, eta_m, x0_m, phi0, g, hb)))))
    sampler = FieldSampler(lambda x, t: fld.evaluate(t, x), 1)
    t = 0.5
    pts = tube_points(tr.state_at(t).X, 3.0 * np.sqrt(hb), 1e-2)
    res = float(np.max(np.abs(apply_gpe(free_model(1), sampler, g, hb, pts, t, 1e-3, 1e-3))))
    return _finish(1, "one-soliton exactness", 5.0, t0,
                   {"pointwise<=1e-12": dev <= 1e-12, "residual<=1e-4": res <= 1e-4},
                   {"pointwise_dev": dev, "tube_residual_max": res, "xi": xi_m, "eta": eta_m, "phi0": phi0})


def criterion_2():
    """Germ integrator against the oscillator closed forms."""
    t0 = time.perf_counter()
    metrics, checks = {}, {}
    for label, sign, T in (("plus", 1.0, 1.2), ("minus", -1.0, 3.0)):
        k = (sign,) * 3
        cf = OscillatorClosedForm(k, Rcheck=1.0)
        P0, X0 = cf.closed_trajectory(0.0)
        tr = integrate(oscillator_model(k), oscillator_initial_state(k, P0=P0, X0=X0), T, 1e-3,
                       error_estimate=False)
        num = {n: [] for n in ("P", "X", "pi", "Q", "S0")}
        ref = {n: [] for n in num}
        action = cf.closed_action_grid(tr.times)
        for st, s0 in zip(tr.states, action):
            P, X = cf.closed_trajectory(st.t)
            Q1, Q2, pv = cf.closed_germ(st.t)
            for n, a, b in (("P", st.P, P), ("X", st.X, X), ("pi", st.pi, pv), ("Q", q_matrix(st), Q1 + 1j * Q2),
                            ("S0", st.S0, s0)):
                num[n].append(a)
                ref[n].append(b)
        devs = {n: _rel(num[n], ref[n]) for n in num}
        metrics[label] = devs
        checks[f"{label}<=1e-8"] = max(devs.values()) <= 1e-8
        if label == "plus":
            q11 = float(q_matrix(tr.state_at(0.5)).real[0, 0])
            metrics["Q11(0.5)"] = q11
            checks["Q11(0.5)=-tan(0.5)"] = abs(q11 + np.tan(0.5)) <= 1e-8
    return _finish(2, "ODE vs closed-form oscillator", 10.0, t0, checks, metrics)


def criterion_3():
    """Conserved quantities and rank conditions along the oscillator presets."""
    t0 = time.perf_counter()
    metrics, checks = {}, {}
    for label, sign, T in (("plus", 1.0, 1.2), ("minus", -1.0, 3.0)):
        k = (sign,) * 3
        tr = integrate(oscillator_model(k), oscillator_initial_state(k), T, 1e-3, error_estimate=False)
        rep = invariant_report(tr)
        ranks = all(check_rank_conditions(st).ok for st in tr.states)
        metrics[label] = dict(rep, rank_ok=ranks)
        checks[f"{label} D0"] = rep["d0_drift"] <= 1e-10
        checks[f"{label} skew"] = rep["skew_drift"] <= 1e-10
        checks[f"{label} Q symmetry"] = rep["q_asymmetry"] <= 1e-9
        checks[f"{label} rank"] = ranks
    return _finish(3, "invariant conservation", 10.0, t0, checks, metrics)


def criterion_4():
    """Germ-assembled fields against the closed-form products."""
    t0 = time.perf_counter()
    k, hb, t = (1.0, 1.0, 1.0), 1.0, 1.0
    tr = integrate(oscillator_model(k), oscillator_initial_state(k), t, 1e-3, error_estimate=False)
    cf = OscillatorClosedForm(k, hbar=hb)
    pts = _cube(tr.state_at(t).X, 3.0 * np.sqrt(hb), 21)
    devs = {}
    for nu in [v for v in product(range(3), repeat=2) if sum(v) <= 2]:
        N0, Nnu = closed_form_normalization(cf, nu)
        fld = SolitonField(tr, PhaseAssembly(hb, cf.g, N0, Nnu), nu)
        devs[str(nu)] = _rel_floor(fld.evaluate(t, pts), cf.psi_pm(nu, pts, t))
    return _finish(4, "field assembly equivalence", 30.0, t0,
                   {"vacuum<=1e-8": devs["(0, 0)"] <= 1e-8, "excited<=1e-8": max(devs.values()) <= 1e-8},
                   {"max_rel_dev": devs})


def criterion_5():
    """Mehler series, spectral phases, delta limit, composition, unitarity."""
    t0 = time.perf_counter()
    metrics, checks = {}, {}
    g = np.linspace(-2.0, 2.0, 41)
    X, Y = np.meshgrid(g, g, indexing="ij")
    mdev = {}
    for lam in (0.1j, 0.5, 0.9 * np.exp(0.25j * np.pi)):
        mdev[str(complex(lam))] = float(np.max(np.abs(mehler(lam, X, Y) - mehler_series(lam, X, Y, 120))))
    mdev["0.9 at (1.2,-0.7)"] = float(abs(mehler(0.9, 1.2, -0.7) - mehler_series(0.9, 1.2, -0.7, 120)))
    metrics["mehler_dev"] = mdev
    checks["mehler N=120 <=1e-9"] = max(mdev.values()) <= 1e-9

    params = TransverseKernelParams(1.0, 1.0, (1.0, 1.3))
    tau, s = 0.7, 0.2
    xs = np.linspace(-3.0, 3.0, 13)
    pdev = {}
    for n2, n3 in [v for v in product(range(4), repeat=2) if sum(v) <= 3]:
        sep = builtin_profile(f"hermite {n2} {n3}", params)
        gen = TransverseProfile(func=lambda a, b, p=sep: p(a, b), dim=2, radius=sep.radius)
        ev = evolve_profile(params, gen, s + tau, s, nodes=200)
        got = ev(xs, 0.4 * xs)
        want = sep(xs, 0.4 * xs) * np.exp(-1j * ((n2 + 0.5) * 1.0 + (n3 + 0.5) * 1.3) * tau)
        pdev[f"{n2},{n3}"] = _rel(got, want)
    metrics["eigen_phase_dev"] = pdev
    checks["eigenphases<=1e-6"] = max(pdev.values()) <= 1e-6

    p1 = TransverseKernelParams(1.0, 1.0, (1.0, 1.0))
    ground = builtin_profile("gaussian", p1)
    ev = evolve_profile(p1, ground, 1e-3, 0.0)
    xd = np.linspace(-2.0, 2.0, 9)
    delta = float(np.max(np.abs(ev(xd, 0.5 * xd) - ground(xd, 0.5 * xd))))
    metrics["delta_limit_dev"] = delta
    checks["delta limit<=1e-3"] = delta <= 1e-3

    p1d = TransverseKernelParams(1.0, 1.0, (1.0,))
    f = lambda y: np.exp(-(y - 0.5) ** 2) * (1.0 + 0.3j * y)  # noqa: E731
    prof1 = TransverseProfile(func=f, dim=1, radius=10.0)
    series = float(np.max(np.abs(series_apply(p1d, f, xd, 0.7, 60) - evolve_profile(p1d, prof1, 0.7)(xd))))
    metrics["kernel_vs_series_weak"] = series
    checks["kernel vs series<=1e-8"] = series <= 1e-8

    test = TransverseProfile(factors=(lambda y: np.exp(-(y - 0.5) ** 2) * (1 + 0.3j * y),
                                      lambda y: np.exp(-y * y / 1.5)), radius=9.0)
    e1 = evolve_profile(params, test, 0.4, 0.0)
    e2 = evolve_profile(params, e1, 1.1, 0.4)
    e3 = evolve_profile(params, test, 1.1, 0.0)
    comp = float(np.max(np.abs(e2(xs, 0.7 * xs) - e3(xs, 0.7 * xs))))
    norm = abs(profile_norm(e3) - profile_norm(test)) / profile_norm(test)
    metrics["composition_dev"] = comp
    metrics["norm_change"] = norm
    checks["composition<=1e-5"] = comp <= 1e-5
    checks["norm<=1e-5"] = norm <= 1e-5
    return _finish(5, "Mehler/kernel suite", 60.0, t0, checks, metrics)


def criterion_6():
    """Transverse operator against the closed forms."""
    t0 = time.perf_counter()
    hb, t = 1.0, 1.0
    cf = OscillatorClosedForm((1.0, 1.0, 1.0), hbar=hb)
    params = TransverseKernelParams(1.0, hb, (1.0, 1.0))
    prof = builtin_profile("gaussian", params, normalized=True)
    pts = _cube(np.zeros(3), 3.0 * np.sqrt(hb), 21)
    dev3 = _rel_floor(u_tr(params, cf, prof, pts, t), cf.psi_pm((0, 0), pts, t))
    x1, x2 = np.meshgrid(np.linspace(-4, 4, 81), np.linspace(-3, 3, 61), indexing="ij")
    pts2 = np.stack([x1, x2], -1)
    out = {}
    for label, k, ref in (("well21", (1.0, 1.0), modulus_well21), ("hill21", (-1.0, -1.0), modulus_hill21)):
        cf2 = OscillatorClosedForm(k, hbar=hb)
        p2 = TransverseKernelParams.from_stiffness(k[1:], 1.0, hb)
        prof2 = builtin_profile("gaussian", p2)
        out[label] = float(np.max(np.abs(np.abs(u_tr(p2, cf2, prof2, pts2, 0.0)) - ref(x1, x2, 0.0, hb))))
    coincide = float(np.max(np.abs(modulus_well21(x1, x2, 0.0) - modulus_hill21(x1, x2, 0.0))))
    return _finish(6, "transverse operator vs closed forms", 60.0, t0,
                   {"vacuum<=1e-6": dev3 <= 1e-6, "well21 t=0<=1e-10": out["well21"] <= 1e-10,
                    "hill21 t=0<=1e-10": out["hill21"] <= 1e-10, "coincide t=0": coincide <= 1e-10},
                   {"vacuum_rel_dev": dev3, "t0_modulus_dev": out, "well21_vs_hill21": coincide})


def scaling_family(k=(1.0, 1.0, 1.0), t=0.5):
    """hbar -> (sampler, vertex) for the oscillator vacuum built from the germ."""
    model = oscillator_model(k)
    tr = integrate(model, oscillator_initial_state(k), t + 0.05, 1e-3, error_estimate=False)

    def fam(h):
        N0, _ = closed_form_normalization(OscillatorClosedForm(k, hbar=h))
        fld = SolitonField(tr, PhaseAssembly(h, 1.0, N0))
        return FieldSampler(lambda x, tt: fld.evaluate(tt, x), len(k)), tr.state_at(t).X

    return model, fam


def criterion_7():
    """hbar scaling of the relative tube residual of the oscillator vacuum."""
    t0 = time.perf_counter()
    model, fam = scaling_family()
    rep = hbar_scaling_study(model, fam, 1.0, [0.2, 0.1, 0.05, 0.025], c=3.0, t=0.5)
    change = max(rep.dx_change)
    return _finish(7, "asymptotic residual scaling", 300.0, t0,
                   {"slope in [1.3,1.7]": 1.3 <= rep.slope <= 1.7, "dx halving<10%": change < 0.1},
                   {"slope": rep.slope, "relative": rep.relative, "dx_change": rep.dx_change})


def criterion_8():
    """Annihilation of the vacuum and ladder commutators."""
    t0 = time.perf_counter()
    k, hb, t = (1.0, 1.0, 1.0), 1.0, 0.7
    tr = integrate(oscillator_model(k), oscillator_initial_state(k), 1.0, 1e-3, error_estimate=False)
    fld = SolitonField(tr, PhaseAssembly(hb, 1.0))
    pts = tube_points(tr.state_at(t).X, 1.5, 0.3)
    defects = annihilation_check(fld, t, pts, h=1e-4)
    comm = commutator_check(fld, t, pts[::3], max_order=2, h=1e-4)
    return _finish(8, "annihilation/commutation", 30.0, t0,
                   {"annihilation<=1e-6": max(defects.values()) <= 1e-6, "commutator<=1e-6": comm <= 1e-6},
                   {"defects": defects, "commutator": comm})


def criterion_9():
    """Focusing, damping, centroid drift and periodicity of the moduli."""
    t0 = time.perf_counter()
    checks, metrics = {}, {}
    cp = OscillatorClosedForm((1.0,))
    cm = OscillatorClosedForm((-1.0,))
    ts = np.linspace(0.0, np.pi / 2 - 1e-3, 400)
    vp = cp.abs_psi_vertex(ts)
    checks["focusing monotone"] = bool(np.all(np.diff(vp) > 0))
    checks["focusing diverges"] = vp[-1] > 1e2
    tm = np.linspace(0.0, 10.0, 400)
    vm = cm.abs_psi_vertex(tm)
    checks["damping monotone"] = bool(np.all(np.diff(vm) < 0))
    checks["damping decays"] = vm[-1] < 1e-3
    metrics["vertex_plus_end"] = float(vp[-1])
    metrics["vertex_minus_end"] = float(vm[-1])
    xs = np.linspace(-2.0, 2.0, 40001)
    h = xs[1] - xs[0]
    drift = []
    for t in (0.3, 0.8, 1.2, 1.4):
        xm = xs[np.argmax(modulus_well(xs, t))]
        drift.append(abs(xm - np.cos(t) * 0.5 * np.log(abs(np.cos(t)))))
    metrics["argmax_drift_dev"] = max(drift)
    checks["argmax within one cell"] = max(drift) <= h
    per = 0.0
    for t in (0.2, 0.9, 1.3, 2.0):
        per = max(per, float(np.max(np.abs(modulus_well(xs, t + np.pi) - modulus_well(xs, t)))))
    metrics["periodicity_dev"] = per
    checks["pi-periodic"] = per <= 1e-12
    # what the formula does satisfy: reflection after pi, strict period 2 pi
    refl = max(float(np.max(np.abs(modulus_well(xs, t + np.pi) - modulus_well(-xs, t)))) for t in (0.2, 0.9, 1.3))
    per2 = max(float(np.max(np.abs(modulus_well(xs, t + 2 * np.pi) - modulus_well(xs, t)))) for t in (0.2, 0.9, 1.3))
    metrics["pi_shift_vs_reflection_dev"] = refl
    metrics["two_pi_periodicity_dev"] = per2
    cons = 0.0
    for t in (0.0, 0.5, 1.0):
        cons = max(cons, float(np.max(np.abs(np.abs(cp.psi_pm((), xs[:, None], t)) - modulus_well(xs, t)))),
                   float(np.max(np.abs(np.abs(cm.psi_pm((), xs[:, None], t)) - modulus_hill(xs, t)))))
    metrics["moduli_vs_field"] = cons
    checks["moduli match field<=1e-12"] = cons <= 1e-12
    return _finish(9, "oscillator phenomenology", 10.0, t0, checks, metrics)


CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 10)}


def run_suites(numbers=None):
    numbers = sorted(CRITERIA) if numbers is None else [int(v) for v in numbers]
    return [CRITERIA[k]() for k in numbers]
