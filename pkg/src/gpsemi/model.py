"""Quadratic-in-momentum Hamiltonian symbols.

The symbol is

    H(p, x, t) = 1/2 <p, Hpp(t) p> + <hvec(x, t), p> + h0(x, t)

and the operator is its Weyl quantization.  Models are immutable bundles of
evaluator callbacks; the built-ins cover the free particle and the diagonal
(an)isotropic oscillator.

Index conventions for the mixed blocks: ``hvec_x(x, t)[i, j]`` is
d hvec_i / d x_j, so ``Hpx = hvec_x`` and ``Hxp = hvec_x.T``.
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "DimensionError",
    "HamiltonianModel",
    "DerivativeBlocks",
    "free_model",
    "oscillator_model",
    "model_from_name",
    "eval_symbol",
    "derivative_blocks",
]


class DimensionError(ValueError):
    """Input array does not match the model dimension."""


@dataclass(frozen=True)
class DerivativeBlocks:
    Hp: np.ndarray
    Hx: np.ndarray
    Hxx: np.ndarray
    Hxp: np.ndarray
    Hpp: np.ndarray

    @property
    def Hpx(self):
        return self.Hxp.T


def _fd_step(x):
    return 1e-5 * (1.0 + np.abs(x))


@dataclass(frozen=True)
class HamiltonianModel:
    """Evaluator bundle for a quadratic symbol.

    ``hvec_xx`` (optional) returns the Hessian in x of <p, hvec(x, t)> at
    fixed p, i.e. sum_k p_k d^2 hvec_k / dx^2.  ``h0_xx`` is required for
    exactness; when either second-derivative evaluator is missing a central
    finite-difference fallback is used and ``approximate_hessian`` is True.
    """

    dim: int
    hpp: Callable[[float], np.ndarray]
    hvec: Callable[[np.ndarray, float], np.ndarray]
    h0: Callable[[np.ndarray, float], float]
    hvec_x: Callable[[np.ndarray, float], np.ndarray]
    h0_x: Callable[[np.ndarray, float], np.ndarray]
    h0_xx: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    hvec_xx: Optional[Callable[[np.ndarray, np.ndarray, float], np.ndarray]] = None
    name: str = "generic"
    params: tuple = ()

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError("model dimension must be >= 1")

    @property
    def approximate_hessian(self):
        return self.h0_xx is None or self.hvec_xx is None

    def check(self, v, what="vector"):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise DimensionError(f"{what} has shape {v.shape}, expected ({self.dim},)")
        return v

    def symbol_hessian_x(self, p, x, t):
        """Second x-derivative of the symbol at fixed p."""
        if self.h0_xx is not None and self.hvec_xx is not None:
            return np.asarray(self.h0_xx(x, t), float) + np.asarray(self.hvec_xx(p, x, t), float)
        n = self.dim
        h = _fd_step(x)

        def grad(xx):
            return np.asarray(self.hvec_x(xx, t), float).T @ p + np.asarray(self.h0_x(xx, t), float)

        hess = np.empty((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = h[j]
            hess[:, j] = (grad(x + e) - grad(x - e)) / (2.0 * h[j])
        return 0.5 * (hess + hess.T)


def eval_symbol(model, p, x, t):
    """Value of the classical symbol H(p, x, t)."""
    p = model.check(p, "p")
    x = model.check(x, "x")
    hpp = np.asarray(model.hpp(t), float)
    return float(0.5 * p @ hpp @ p + np.asarray(model.hvec(x, t), float) @ p + model.h0(x, t))


def derivative_blocks(model, p, x, t):
    """First and second derivative blocks of the symbol at (p, x, t)."""
    p = model.check(p, "p")
    x = model.check(x, "x")
    hpp = np.asarray(model.hpp(t), float)
    jac = np.asarray(model.hvec_x(x, t), float)
    hp = hpp @ p + np.asarray(model.hvec(x, t), float)
    hx = jac.T @ p + np.asarray(model.h0_x(x, t), float)
    hxx = model.symbol_hessian_x(p, x, t)
    return DerivativeBlocks(Hp=hp, Hx=hx, Hxx=hxx, Hxp=jac.T.copy(), Hpp=hpp)


def free_model(dim, m=1.0):
    """Free particle H = p^2 / 2m."""
    m = float(m)
    if m <= 0:
        raise ValueError("mass must be positive")
    eye = np.eye(dim) / m
    zero_v = np.zeros(dim)
    zero_m = np.zeros((dim, dim))
    return HamiltonianModel(
        dim=dim,
        hpp=lambda t: eye,
        hvec=lambda x, t: zero_v,
        h0=lambda x, t: 0.0,
        hvec_x=lambda x, t: zero_m,
        h0_x=lambda x, t: zero_v,
        h0_xx=lambda x, t: zero_m,
        hvec_xx=lambda p, x, t: zero_m,
        name="free",
        params=(("m", m),),
    )


def oscillator_model(k, m=1.0):
    """Diagonal oscillator H = p^2 / 2m + <x, K x> / 2 with K = diag(k).

    Entries of ``k`` may have any sign (wells and hills).
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    m = float(m)
    if m <= 0:
        raise ValueError("mass must be positive")
    dim = k.size
    kmat = np.diag(k)
    eye = np.eye(dim) / m
    zero_v = np.zeros(dim)
    zero_m = np.zeros((dim, dim))
    return HamiltonianModel(
        dim=dim,
        hpp=lambda t: eye,
        hvec=lambda x, t: zero_v,
        h0=lambda x, t: 0.5 * float(x @ (k * x)),
        hvec_x=lambda x, t: zero_m,
        h0_x=lambda x, t: k * x,
        h0_xx=lambda x, t: kmat,
        hvec_xx=lambda p, x, t: zero_m,
        name="oscillator",
        params=(("m", m), ("k", tuple(k.tolist()))),
    )


def model_from_name(name, dim=None, m=1.0, k=None):
    """Built-in model by config name: ``"free"`` or ``"oscillator"``."""
    if name == "free":
        if dim is None:
            raise ValueError("free model needs a dimension")
        return free_model(int(dim), m)
    if name == "oscillator":
        if k is None:
            raise ValueError("oscillator model needs stiffness list k")
        if dim is not None and len(k) != int(dim):
            raise ValueError(f"oscillator stiffness has {len(k)} entries, dim={dim}")
        return oscillator_model(k, m)
    raise ValueError(f"unknown model {name!r}; expected 'free' or 'oscillator'")
