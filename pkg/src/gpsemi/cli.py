"""Command line front end.

Every subcommand reads an optional TOML config, applies ``--set`` overrides
and the dedicated flags (which are shorthands for config keys), writes its
tables plus ``metadata.json`` into the output directory and exits with

    0 success, 2 config error, 3 caustic, 4 validation failure,
    5 numerical-resolution failure.
"""
import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .kernels import BACKEND
from .config import ConfigError, load_config
from .field import PhaseAssembly, SolitonField
from .germ import (COND_MAX, CausticError, DegenerateGermError, NegativeNormError, integrate, invariant_report,
                   d0_matrix, oscillator_initial_state, q_matrix, state_from_q)
from .io import write_metadata, write_table
from .model import model_from_name
from .oscillator import OscillatorClosedForm, closed_form_normalization
from .residual import MismatchError, StencilError, UnderResolvedError, compare_fields
from .transverse import (QuadratureError, SingularKernelError, TransverseKernelParams, builtin_profile,
                         evolve_profile, green_kernel, mehler, mehler_series, profile_norm, read_profile, u_tr)

EXIT_OK, EXIT_CONFIG, EXIT_CAUSTIC, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3, 4, 5

__all__ = ["main", "build_parser", "ValidationFailure"]


class ValidationFailure(RuntimeError):
    """A check requested on the command line did not pass."""


# construction helpers -------------------------------------------------------
def build_model(cfg):
    return model_from_name(cfg.model, dim=cfg.dim, m=cfg.m, k=cfg.k if cfg.model == "oscillator" else None)


def closed_form(cfg, nu=None):
    if cfg.model != "oscillator":
        raise ConfigError("closed forms exist for the oscillator model only", "model.name")
    ini = cfg.initial
    return OscillatorClosedForm(tuple(cfg.k), m=cfg.m, g=cfg.g, hbar=cfg.hbar, pi0=ini["pi0"],
                                Rcheck=float(ini.get("Rcheck", 0.0)), phi0=float(ini.get("phi0", 0.0)),
                                hermite_norm=bool(cfg.raw["field"].get("hermite_norm", True)))


def initial_state(cfg):
    ini, n = cfg.initial, cfg.dim
    if ini["preset"] == "oscillator":
        cf = closed_form(cfg)
        P0, X0 = cf.closed_trajectory(0.0)
        return oscillator_initial_state(cfg.k, m=cfg.m, pi0=ini["pi0"], P0=P0, X0=X0)
    pi = np.asarray(ini.get("pi", [ini["pi0"]] + [0.0] * (n - 1)), float)
    if "Q0_im" in ini:
        qim = np.asarray(ini["Q0_im"], float)
    else:
        qim = np.eye(n) - np.outer(pi, pi) / float(pi @ pi)
    qre = np.asarray(ini.get("Q0_re", np.zeros((n, n))), float)
    P0 = np.asarray(ini.get("P0", np.zeros(n)), float)
    X0 = np.asarray(ini.get("X0", np.zeros(n)), float)
    try:
        return state_from_q(P0, X0, pi, qre + 1j * qim, hbar=cfg.hbar, t0=cfg.t0)
    except (ValueError, DegenerateGermError, NegativeNormError) as exc:
        raise ConfigError(str(exc), "initial") from None


def run_trajectory(cfg, t_end=None, error_estimate=True):
    t_end = cfg.t_end if t_end is None else t_end
    return integrate(build_model(cfg), initial_state(cfg), t_end, cfg.step, error_estimate=error_estimate)


def normalization(cfg):
    mode = cfg.raw["physics"].get("normalization", "closed_form")
    if mode == "zero":
        return 0j, 0j
    if mode != "closed_form":
        raise ConfigError(f"unknown normalization {mode!r}", "physics.normalization")
    if cfg.model != "oscillator" or cfg.initial["preset"] != "oscillator":
        return 0j, 0j
    return closed_form_normalization(closed_form(cfg), cfg.nu)


def transverse_profile(cfg, params):
    tcfg = cfg.raw["transverse"]
    spec = str(tcfg.get("profile", "gaussian"))
    if spec.startswith("file:"):
        try:
            prof = read_profile(spec[5:])
        except OSError as exc:
            raise ConfigError(f"cannot read profile: {exc}", "transverse.profile") from None
        if prof.dim != params.dim:
            raise ConfigError(f"profile has {prof.dim} variables, need {params.dim}", "transverse.profile")
        return prof
    try:
        return builtin_profile(spec, params, normalized=bool(tcfg.get("normalized", True)))
    except ValueError as exc:
        raise ConfigError(str(exc), "transverse.profile") from None


def transverse_params(cfg):
    if cfg.dim < 2:
        raise ConfigError("transverse backend needs dimension 2 or 3", "field.backend")
    if cfg.model != "oscillator":
        raise ConfigError("transverse backend needs the oscillator model", "field.backend")
    return TransverseKernelParams.from_stiffness(cfg.k[1:], cfg.m, cfg.hbar)


def make_sampler(cfg, backend, times):
    """(sampler(points, t) -> psi, center(t) -> X, phases-capable field or None)."""
    if backend == "germ":
        t_end = max(max(times), cfg.t0 + cfg.step)
        tr = integrate(build_model(cfg), initial_state(cfg), t_end, cfg.step, error_estimate=False)
        N0, Nnu = normalization(cfg)
        fld = SolitonField(tr, PhaseAssembly(cfg.hbar, cfg.g, N0, Nnu), cfg.nu)
        return fld, (lambda t: tr.state_at(t).X), fld
    cf = closed_form(cfg)
    center = lambda t: cf.closed_trajectory(t)[1]  # noqa: E731
    if backend == "closed_form":
        nu = cfg.nu if cfg.dim > 1 else ()
        return (lambda x, t: cf.psi_pm(nu, x, t)), center, None
    params = transverse_params(cfg)
    prof = transverse_profile(cfg, params)
    tcfg = cfg.raw["transverse"]
    s, nodes, tol = float(tcfg.get("s", 0.0)), int(tcfg.get("nodes", 200)), float(tcfg.get("tol", 1e-7))
    return (lambda x, t: u_tr(params, cf, prof, x, t, s=s, nodes=nodes, tol=tol)), center, None


def grid_points(cfg, center):
    axes = [np.linspace(lo, hi, int(n)) for lo, hi, n in cfg.axes]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], -1)
    if cfg.raw["grid"].get("relative", True):
        pts = pts + np.asarray(center, float)
    return pts


def base_metadata(cfg, command):
    return {"command": command, "config": cfg.raw, "code_version": __version__, "kernel_backend": BACKEND,
            "tolerances": {"step": cfg.step, "cond_max": COND_MAX,
                           "transverse_tol": cfg.raw["transverse"].get("tol"),
                           "transverse_nodes": cfg.raw["transverse"].get("nodes")}}


# subcommands ----------------------------------------------------------------
def cmd_simulate(cfg, args):
    out = cfg.outdir
    meta = base_metadata(cfg, "simulate")
    try:
        tr = run_trajectory(cfg)
    except CausticError as exc:
        meta.update(status="caustic", caustic_time=exc.t, message=str(exc))
        write_metadata(os.path.join(out, "metadata.json"), meta)
        raise
    n = cfg.dim
    D00 = d0_matrix(tr.states[0])
    cols = {"t": tr.times}
    for name in ("P", "X", "pi"):
        for i in range(n):
            cols[f"{name}{i + 1}"] = [getattr(s, name)[i] for s in tr.states]
    qs = [q_matrix(s) for s in tr.states]
    for name, mats in (("B", [s.B for s in tr.states]), ("C", [s.C for s in tr.states]), ("Q", qs)):
        for i in range(n):
            for j in range(n):
                cols[f"re_{name}{i + 1}{j + 1}"] = [M[i, j].real for M in mats]
                cols[f"im_{name}{i + 1}{j + 1}"] = [M[i, j].imag for M in mats]
    cols["S0"] = [s.S0 for s in tr.states]
    cols["re_logdetC"] = [s.logdetC.real for s in tr.states]
    cols["im_logdetC"] = [s.logdetC.imag for s in tr.states]
    cols["d0_drift"] = [float(np.max(np.abs(d0_matrix(s) - D00))) for s in tr.states]
    cols["err_est"] = tr.error_estimates
    write_table(os.path.join(out, "trajectory.csv"), cols, cfg.delimiter)
    meta.update(status="ok", invariants=invariant_report(tr), integrator=tr.meta, outputs=["trajectory.csv"])
    write_metadata(os.path.join(out, "metadata.json"), meta)
    print(f"trajectory: {len(tr)} steps to t={tr.t_end:g}, D0 drift {max(cols['d0_drift']):.3e}")
    return EXIT_OK


def cmd_field(cfg, args):
    times = cfg.times
    sampler, center, fld = make_sampler(cfg, cfg.backend, times)
    rows = {k: [] for k in ["t"] + [f"x{i + 1}" for i in range(cfg.dim)] + ["re_psi", "im_psi", "abs_psi"]}
    if fld is not None:
        rows["S"], rows["sigma"] = [], []
    nonfinite = 0
    for t in times:
        pts = grid_points(cfg, center(t))
        if fld is not None:
            smp = fld.evaluate(t, pts, with_phases=True)
            psi = smp.psi
            nonfinite += smp.nonfinite
            rows["S"].append(smp.S)
            rows["sigma"].append(smp.sigma)
        else:
            psi = sampler(pts, t)
            nonfinite += int(np.count_nonzero(~np.isfinite(psi)))
        rows["t"].append(np.full(pts.shape[0], float(t)))
        for i in range(cfg.dim):
            rows[f"x{i + 1}"].append(pts[:, i])
        rows["re_psi"].append(psi.real)
        rows["im_psi"].append(psi.imag)
        rows["abs_psi"].append(np.abs(psi))
    cols = {k: np.concatenate(v) for k, v in rows.items()}
    write_table(os.path.join(cfg.outdir, "field.csv"), cols, cfg.delimiter)
    meta = base_metadata(cfg, "field")
    meta.update(status="ok", backend=cfg.backend, nu=list(cfg.nu), nonfinite=nonfinite, outputs=["field.csv"])
    write_metadata(os.path.join(cfg.outdir, "metadata.json"), meta)
    print(f"field ({cfg.backend}): {cols['t'].size} samples at {len(times)} time(s)")
    return EXIT_OK


def cmd_validate(cfg, args):
    from .validation import run_suites
    suites = cfg.raw["validate"].get("suites", list(range(1, 10)))
    try:
        results = run_suites(suites)
    except KeyError as exc:
        raise ConfigError(f"unknown suite {exc}", "validate.suites") from None
    for r in results:
        print(r.line())
    failed = [r.number for r in results if not r.passed]
    meta = base_metadata(cfg, "validate")
    meta.update(status="fail" if failed else "ok", failed=failed,
                results=[r.as_dict() for r in results], outputs=["metadata.json"])
    # runtimes vary between runs; keep them out of the deterministic record
    for r in meta["results"]:
        r.pop("runtime", None)
    write_metadata(os.path.join(cfg.outdir, "metadata.json"), meta)
    if failed:
        raise ValidationFailure(f"suites failed: {failed}")
    return EXIT_OK


def cmd_kernel(cfg, args):
    kc = cfg.raw["kernel"]
    N, tol = int(kc.get("N", 260)), float(kc.get("tol", 1e-9))
    hw, count = float(kc.get("half_width", 2.0)), int(kc.get("count", 21))
    g = np.linspace(-hw, hw, count)
    X, Y = np.meshgrid(g, g, indexing="ij")
    rows = {k: [] for k in ("lam_re", "lam_im", "x", "y", "re_closed", "im_closed", "re_series", "im_series", "abs_dev")}
    devs = {}
    for lam in kc.get("lambdas", []):
        lam = complex(lam[0], lam[1]) if isinstance(lam, list) else complex(lam)
        if not abs(lam) < 1:
            raise ConfigError(f"|lambda| must be < 1, got {abs(lam)}", "kernel.lambdas")
        a, b = mehler(lam, X, Y), mehler_series(lam, X, Y, N)
        d = np.abs(a - b)
        devs[f"{lam.real:.6g}{lam.imag:+.6g}j"] = float(d.max())
        for key, v in (("lam_re", np.full(X.size, lam.real)), ("lam_im", np.full(X.size, lam.imag)),
                       ("x", X.ravel()), ("y", Y.ravel()), ("re_closed", a.real.ravel()),
                       ("im_closed", a.imag.ravel()), ("re_series", b.real.ravel()),
                       ("im_series", b.imag.ravel()), ("abs_dev", d.ravel())):
            rows[key].append(v)
    cols = {k: np.concatenate(v) if v else np.zeros(0) for k, v in rows.items()}
    write_table(os.path.join(cfg.outdir, "mehler.csv"), cols, cfg.delimiter)
    outputs = ["mehler.csv"]
    tau = kc.get("tau")
    if tau is not None and cfg.dim >= 2 and cfg.model == "oscillator":
        params = transverse_params(cfg)
        pts = np.zeros((count, params.dim))
        pts[:, 0] = g
        G = green_kernel(params, pts[:, None, :], pts[None, :, :], float(tau), 0.0)
        write_table(os.path.join(cfg.outdir, "green.csv"),
                    {"x": np.repeat(g, count), "y": np.tile(g, count), "re_G": G.real.ravel(),
                     "im_G": G.imag.ravel()}, cfg.delimiter)
        outputs.append("green.csv")
    worst = max(devs.values(), default=0.0)
    passed = worst <= tol
    meta = base_metadata(cfg, "kernel")
    meta.update(status="ok" if passed else "fail", series_terms=N, tol=tol, mehler_dev=devs, outputs=outputs)
    write_metadata(os.path.join(cfg.outdir, "metadata.json"), meta)
    print(f"{'PASS' if passed else 'FAIL'} mehler self-test N={N}: max dev {worst:.3e} (tol {tol:g})")
    if not passed:
        raise ValidationFailure(f"mehler self-test deviation {worst:.3e} > {tol:g}")
    return EXIT_OK


def _eigen_phase(spec, params):
    """Exact phase rate of a built-in Hermite-Gaussian eigenprofile (wells only)."""
    words = spec.split()
    if any(s < 0 for s in params.signs):
        return None
    if words[0] == "gaussian":
        ns = [0] * params.dim
    elif words[0] == "hermite":
        ns = [int(v) for v in words[1:]] + [0] * (params.dim - len(words) + 1)
    else:
        return None
    return sum((n + 0.5) * w for n, w in zip(ns, params.omegas))


def cmd_evolve(cfg, args):
    params = transverse_params(cfg)
    prof = transverse_profile(cfg, params)
    tcfg = cfg.raw["transverse"]
    s, nodes, tol = float(tcfg.get("s", 0.0)), int(tcfg.get("nodes", 200)), float(tcfg.get("tol", 1e-7))
    axes = [np.linspace(lo, hi, int(n)) for lo, hi, n in cfg.axes[1:]]
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = [m.ravel() for m in mesh]
    base = np.asarray(prof(*flat), complex)
    rate = _eigen_phase(str(tcfg.get("profile", "gaussian")), params)
    rows = {k: [] for k in ["t"] + [f"x{j + 2}" for j in range(params.dim)] + ["re_phi", "im_phi", "abs_phi"]}
    report = []
    for t in cfg.times:
        ev = evolve_profile(params, prof, t, s, nodes=nodes, tol=tol)
        vals = np.asarray(ev(*flat), complex)
        rows["t"].append(np.full(vals.size, float(t)))
        for j in range(params.dim):
            rows[f"x{j + 2}"].append(flat[j])
        rows["re_phi"].append(vals.real)
        rows["im_phi"].append(vals.imag)
        rows["abs_phi"].append(np.abs(vals))
        entry = {"t": float(t), "identity": t == s, "norm": profile_norm(ev) if t != s else profile_norm(prof)}
        if rate is not None:
            want = base * np.exp(-1j * rate * (t - s))
            mask = np.abs(base) > 1e-3 * np.max(np.abs(base))
            entry["expected_phase"] = -rate * (t - s)
            entry["phase_dev"] = float(np.max(np.abs(vals[mask] - want[mask]) / np.abs(want[mask])))
        report.append(entry)
        line = f"t={t:g}: norm {entry['norm']:.12g}"
        if "phase_dev" in entry:
            line += f", phase exp(-i {rate:.6g} (t-s)) dev {entry['phase_dev']:.3e}"
        print(line)
    cols = {k: np.concatenate(v) for k, v in rows.items()}
    write_table(os.path.join(cfg.outdir, "evolve.csv"), cols, cfg.delimiter)
    meta = base_metadata(cfg, "evolve")
    meta.update(status="ok", s=s, report=report, outputs=["evolve.csv"])
    write_metadata(os.path.join(cfg.outdir, "metadata.json"), meta)
    return EXIT_OK


def cmd_compare(cfg, args):
    cc = cfg.raw["compare"]
    a_name, b_name = cc.get("a", "germ"), cc.get("b", "closed_form")
    for key, name in (("compare.a", a_name), ("compare.b", b_name)):
        if name not in ("germ", "closed_form", "transverse"):
            raise ConfigError(f"unknown backend {name!r}", key)
    tol, floor = float(cc.get("tol", 1e-6)), float(cc.get("floor", 1e-8))
    extra = int(cc.get("random_points", 0))
    fa, center, _ = make_sampler(cfg, a_name, cfg.times)
    fb, _, _ = make_sampler(cfg, b_name, cfg.times)
    rng = np.random.default_rng(cfg.seed)
    rows = {k: [] for k in ("t", "max_abs", "max_rel", "points", "compared")}
    for t in cfg.times:
        pts = grid_points(cfg, center(t))
        if extra:
            lo, hi = pts.min(0), pts.max(0)
            pts = np.vstack([pts, lo + (hi - lo) * rng.random((extra, cfg.dim))])
        r = compare_fields(fa, fb, pts, t, floor=floor)
        rows["t"].append(float(t))
        for k in ("max_abs", "max_rel", "points", "compared"):
            rows[k].append(r[k])
        print(f"t={t:g}: max abs {r['max_abs']:.3e}, max rel {r['max_rel']:.3e} over {r['compared']} points")
    write_table(os.path.join(cfg.outdir, "compare.csv"), rows, cfg.delimiter)
    worst = max(rows["max_rel"], default=0.0)
    passed = worst <= tol
    meta = base_metadata(cfg, "compare")
    meta.update(status="ok" if passed else "fail", a=a_name, b=b_name, tol=tol, worst_rel=worst,
                outputs=["compare.csv"])
    write_metadata(os.path.join(cfg.outdir, "metadata.json"), meta)
    if not passed:
        raise ValidationFailure(f"{a_name} vs {b_name}: relative deviation {worst:.3e} > {tol:g}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "field": cmd_field, "validate": cmd_validate,
            "kernel": cmd_kernel, "evolve": cmd_evolve, "compare": cmd_compare}

HELP = {
    "simulate": "integrate trajectory and germ, write trajectory.csv",
    "field": "sample the field on the configured grid, write field.csv",
    "validate": "run acceptance suites, write metadata.json (exit 4 on failure)",
    "kernel": "Mehler closed form vs Hermite series, plus a Green kernel slice",
    "evolve": "propagate a transverse profile and report eigen-phases",
    "compare": "germ-assembled field vs closed form or transverse operator",
}

# flag -> (config key, argparse kwargs)
FLAGS = {
    "--hbar": ("physics.hbar", {"type": float}),
    "--g": ("physics.g", {"type": float}),
    "--t-end": ("time.t_end", {"type": float}),
    "--step": ("time.step", {"type": float}),
    "--times": ("time.times", {"type": float, "nargs": "+"}),
    "--backend": ("field.backend", {"choices": ["germ", "closed_form", "transverse"]}),
    "--nu": ("field.nu", {"type": int, "nargs": "+"}),
    "--profile": ("transverse.profile", {}),
    "--nodes": ("transverse.nodes", {"type": int}),
    "--suites": ("validate.suites", {"type": int, "nargs": "+"}),
    "--terms": ("kernel.N", {"type": int}),
    "--seed": ("output.seed", {"type": int}),
}


def build_parser():
    p = argparse.ArgumentParser(prog="gpsemi", description="Semiclassical soliton asymptotics toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=HELP[name])
        sp.add_argument("-c", "--config", help="TOML configuration file")
        sp.add_argument("-o", "--outdir", help="output directory (output.dir)")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key, value parsed as TOML")
        for flag, (key, kw) in FLAGS.items():
            kw = dict(kw)
            if "choices" not in kw:
                kw["metavar"] = "V"
            sp.add_argument(flag, dest=key.replace(".", "__"), help=f"sets {key}", **kw)
    return p


def _flag_overrides(args):
    out = []
    for _, (key, _) in FLAGS.items():
        v = getattr(args, key.replace(".", "__"))
        if v is None:
            continue
        out.append(f"{key}={json.dumps(v)}")
    if args.outdir:
        out.append(f"output.dir={json.dumps(args.outdir)}")
    return out


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, list(args.set) + _flag_overrides(args))
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CausticError as exc:
        print(f"caustic: {exc}", file=sys.stderr)
        return EXIT_CAUSTIC
    except ValidationFailure as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (QuadratureError, UnderResolvedError, MismatchError, StencilError, SingularKernelError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
