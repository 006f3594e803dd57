"""Run configuration: a TOML file plus ``section.key=value`` overrides."""
import copy
import math
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["ConfigError", "DEFAULTS", "RunConfig", "load_config", "apply_overrides", "parse_value"]


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending field."""

    def __init__(self, msg, key=None):
        self.key = key
        super().__init__(f"{key}: {msg}" if key else msg)


DEFAULTS = {
    "model": {"name": "oscillator", "m": 1.0, "k": [1.0, 1.0, 1.0]},
    "initial": {"preset": "auto", "pi0": 1.0, "Rcheck": 0.0, "phi0": 0.0},
    "physics": {"hbar": 1.0, "g": 1.0, "normalization": "closed_form"},
    "time": {"t0": 0.0, "t_end": 1.2, "step": 1e-3, "times": [0.0, 0.5, 1.0]},
    "grid": {"axes": [[-3.0, 3.0, 31], [-3.0, 3.0, 31], [-3.0, 3.0, 31]], "relative": True},
    "field": {"backend": "germ", "nu": [0, 0], "hermite_norm": True},
    "transverse": {"profile": "gaussian", "nodes": 200, "tol": 1e-7, "s": 0.0, "normalized": True},
    "kernel": {"lambdas": [[0.0, 0.1], [0.5, 0.0], [0.6363961030678928, 0.6363961030678927]],
               "N": 260, "tol": 1e-9, "tau": 0.7, "count": 21, "half_width": 2.0},
    "validate": {"suites": [1, 2, 3, 4, 5, 6, 7, 8, 9]},
    "compare": {"a": "germ", "b": "closed_form", "tol": 1e-6, "floor": 1e-8, "random_points": 0},
    "output": {"dir": "runs/out", "delimiter": ",", "seed": 0},
}


def parse_value(text):
    """TOML literal if it parses, else the raw string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def _merge(base, over, prefix=""):
    out = copy.deepcopy(base)
    for k, v in over.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            if k in out and not isinstance(out[k], dict):
                raise ConfigError("expected a value, got a table", key)
            out[k] = _merge(out.get(k, {}), v, key + ".")
        else:
            out[k] = v
    return out


def apply_overrides(cfg, items):
    """Apply ``section.key=value`` strings to a nested dict (returns a copy)."""
    cfg = copy.deepcopy(cfg)
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, text = item.split("=", 1)
        parts = [p for p in key.strip().split(".") if p]
        if not parts:
            raise ConfigError(f"override {item!r} has an empty key")
        node = cfg
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError("cannot descend into a value", key)
        node[parts[-1]] = parse_value(text.strip())
    return cfg


def load_config(path=None, overrides=None):
    """Defaults, then the TOML file (if any), then overrides; validated."""
    user = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                user = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except tomllib.TOMLDecodeError as exc:
            msg = str(exc)
            line = getattr(exc, "lineno", None)
            if line is not None and "line" not in msg:
                msg += f" (line {line})"
            raise ConfigError(f"{path}: {msg}") from None
    raw = apply_overrides(_merge(DEFAULTS, user), overrides)
    return RunConfig.from_dict(raw)


def _finite(x, key, positive=False):
    try:
        v = float(x)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {x!r}", key) from None
    if not math.isfinite(v):
        raise ConfigError("must be finite", key)
    if positive and v <= 0:
        raise ConfigError("must be positive", key)
    return v


def _vec(x, key, n=None):
    if not isinstance(x, (list, tuple)):
        raise ConfigError("expected a list", key)
    v = [_finite(e, f"{key}[{i}]") for i, e in enumerate(x)]
    if n is not None and len(v) != n:
        raise ConfigError(f"expected {n} entries, got {len(v)}", key)
    return v


@dataclass
class RunConfig:
    raw: dict
    model: str
    dim: int
    m: float
    k: list
    hbar: float
    g: float
    t0: float
    t_end: float
    step: float
    times: list
    axes: list
    nu: tuple
    backend: str
    outdir: str
    delimiter: str
    seed: int
    initial: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw):
        mdl = raw["model"]
        name = mdl.get("name")
        if name not in ("free", "oscillator"):
            raise ConfigError(f"unknown model {name!r}", "model.name")
        m = _finite(mdl.get("m", 1.0), "model.m", positive=True)
        if name == "oscillator":
            k = _vec(mdl.get("k"), "model.k")
            if any(v == 0 for v in k):
                raise ConfigError("stiffness entries must be nonzero", "model.k")
            dim = len(k)
            if "dim" in mdl and int(mdl["dim"]) != dim:
                raise ConfigError(f"dim={mdl['dim']} but k has {dim} entries", "model.dim")
        else:
            if "dim" not in mdl:
                raise ConfigError("free model needs dim", "model.dim")
            dim = int(mdl["dim"])
            k = [0.0] * dim
        if not 1 <= dim <= 3:
            raise ConfigError("dimension must be 1, 2 or 3", "model.dim")
        ph = raw["physics"]
        hbar = _finite(ph.get("hbar"), "physics.hbar", positive=True)
        g = _finite(ph.get("g"), "physics.g")
        if g == 0:
            raise ConfigError("must be nonzero", "physics.g")
        tm = raw["time"]
        t0 = _finite(tm.get("t0", 0.0), "time.t0")
        t_end = _finite(tm.get("t_end"), "time.t_end")
        step = _finite(tm.get("step"), "time.step", positive=True)
        if t_end <= t0:
            raise ConfigError("must exceed time.t0", "time.t_end")
        times = _vec(tm.get("times", [t0]), "time.times")
        axes = raw["grid"].get("axes")
        if not isinstance(axes, list) or len(axes) < dim:
            raise ConfigError(f"need {dim} axis specs [min, max, count]", "grid.axes")
        axes = axes[:dim]
        for i, a in enumerate(axes):
            key = f"grid.axes[{i}]"
            if not isinstance(a, list) or len(a) != 3:
                raise ConfigError("axis spec is [min, max, count]", key)
            _finite(a[0], key)
            _finite(a[1], key)
            if int(a[2]) < 2:
                raise ConfigError("count must be >= 2", key)
        nu = raw["field"].get("nu", [0] * (dim - 1))
        if not isinstance(nu, list):
            raise ConfigError("expected a list of integers", "field.nu")
        nu = tuple(int(v) for v in nu[:dim - 1]) if dim > 1 else ()
        if len(nu) != dim - 1 or any(v < 0 for v in nu):
            raise ConfigError(f"need {dim - 1} non-negative entries", "field.nu")
        backend = raw["field"].get("backend", "germ")
        if backend not in ("germ", "closed_form", "transverse"):
            raise ConfigError(f"unknown backend {backend!r}", "field.backend")
        ini = raw["initial"]
        ini = dict(ini)
        preset = ini.get("preset", "auto")
        if preset == "auto":
            preset = "oscillator" if name == "oscillator" else "explicit"
        if preset not in ("oscillator", "explicit"):
            raise ConfigError(f"unknown preset {preset!r}", "initial.preset")
        if preset == "oscillator":
            if name != "oscillator":
                raise ConfigError("oscillator preset needs the oscillator model", "initial.preset")
            if t0 != 0.0:
                raise ConfigError("oscillator preset starts at t0 = 0", "time.t0")
        ini["preset"] = preset
        ini["pi0"] = _finite(ini.get("pi0", 1.0), "initial.pi0")
        if ini["pi0"] == 0:
            raise ConfigError("must be nonzero", "initial.pi0")
        for key in ("P0", "X0"):
            if key in ini:
                ini[key] = _vec(ini[key], f"initial.{key}", dim)
        if "pi" in ini:
            ini["pi"] = _vec(ini["pi"], "initial.pi", dim)
        for key in ("Q0_re", "Q0_im"):
            if key in ini:
                rows = ini[key]
                if not isinstance(rows, list) or len(rows) != dim:
                    raise ConfigError(f"expected a {dim}x{dim} matrix", f"initial.{key}")
                ini[key] = [_vec(r, f"initial.{key}[{i}]", dim) for i, r in enumerate(rows)]
        out = raw["output"]
        return cls(raw=raw, model=name, dim=dim, m=m, k=k, hbar=hbar, g=g, t0=t0, t_end=t_end, step=step,
                   times=times, axes=[[float(a[0]), float(a[1]), int(a[2])] for a in axes], nu=nu,
                   backend=backend, outdir=str(out.get("dir", "runs/out")), delimiter=str(out.get("delimiter", ",")),
                   seed=int(out.get("seed", 0)), initial=ini)
