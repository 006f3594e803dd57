"""Semiclassical soliton-like asymptotics of the Gross-Pitaevskii equation.

Complex-germ construction of localized solutions: trajectory and germ
dynamics, vacuum and excited fields, closed forms for the diagonal
oscillator, the transverse evolution operator and a finite-difference
residual oracle.
"""
__version__ = "0.1.0"

from .model import DimensionError, HamiltonianModel, free_model, model_from_name, oscillator_model
from .germ import (BranchGuardError, CausticError, GermState, GermTrajectory, integrate, normalize_germ,
                   oscillator_initial_state, state_from_q)
from .ladder import MultiIndex, excited_polynomial, hermite_1d
from .field import PhaseAssembly, SolitonField, field_eval
from .oscillator import OscillatorClosedForm, closed_form_normalization
from .transverse import (TransverseKernelParams, TransverseProfile, builtin_profile, evolve_profile,
                         green_kernel, mehler, mehler_series, u_tr)
from .residual import apply_gpe, compare_fields, hbar_scaling_study, one_soliton, soliton_parameter_map
from .kernels import BACKEND

__all__ = [
    "__version__", "BACKEND",
    "DimensionError", "HamiltonianModel", "free_model", "model_from_name", "oscillator_model",
    "BranchGuardError", "CausticError", "GermState", "GermTrajectory", "integrate", "normalize_germ",
    "oscillator_initial_state", "state_from_q",
    "MultiIndex", "excited_polynomial", "hermite_1d",
    "PhaseAssembly", "SolitonField", "field_eval",
    "OscillatorClosedForm", "closed_form_normalization",
    "TransverseKernelParams", "TransverseProfile", "builtin_profile", "evolve_profile", "green_kernel",
    "mehler", "mehler_series", "u_tr",
    "apply_gpe", "compare_fields", "hbar_scaling_study", "one_soliton", "soliton_parameter_map",
]
