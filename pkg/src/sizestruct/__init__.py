"""Numerical laboratory for a linear size-structured population with an
active and a resting phase and a nonlocal birth kernel."""

from .asymptotics import (aeg_check, extinction_sufficient, growth_rate,
                          irreducibility_conditions, tau)
from .coeffs import (CoefficientFn, GeneralKernel, ModelParams, SeparableKernel,
                     constant, gaussian_bump, kernel_eval, linear, separable_envelope,
                     table)
from .errors import (ConfigError, ConvergenceError, DomainError, ExtinctError,
                     NoRootError, NumericalError, SizeStructError, StepError)
from .solver import (Grid, PopulationState, Trajectory, build_grid, cfl_dt, lie_step,
                     reaction_birth_step, simulate, transport_step)
from .spectral import (K_of_lambda, SpectralResult, dominant_eigenpair, generator_matrix,
                       rank_n_char_matrix, solve_lambda_star, solve_rank_n_root)

__version__ = "0.1.0"

__all__ = [
    "aeg_check",
    "build_grid",
    "cfl_dt",
    "CoefficientFn",
    "ConfigError",
    "constant",
    "ConvergenceError",
    "DomainError",
    "dominant_eigenpair",
    "ExtinctError",
    "extinction_sufficient",
    "gaussian_bump",
    "GeneralKernel",
    "generator_matrix",
    "Grid",
    "growth_rate",
    "irreducibility_conditions",
    "K_of_lambda",
    "kernel_eval",
    "lie_step",
    "linear",
    "ModelParams",
    "NoRootError",
    "NumericalError",
    "PopulationState",
    "rank_n_char_matrix",
    "reaction_birth_step",
    "separable_envelope",
    "SeparableKernel",
    "simulate",
    "SizeStructError",
    "solve_lambda_star",
    "solve_rank_n_root",
    "SpectralResult",
    "StepError",
    "table",
    "tau",
    "Trajectory",
    "transport_step",
]
