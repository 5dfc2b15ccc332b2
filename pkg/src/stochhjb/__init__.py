"""Pseudo-spectral solvers and verification tools for the stochastic viscous
Hamilton-Jacobi-Bellman equation with transport noise on the n-torus."""

from .errors import ConfigError, ConvergenceError, OracleError
from .fieldio import SpatialField, SpectralField
from .mild import MildProblem, fixed_point_solve, picard_apply
from .noise import NoisePath, sample_path, zero_path
from .solver import SolverConfig, Trajectory, integrate, step_ito_exp_em, step_strat_heun
from .spectral import TorusGrid
from .transport import TransportOperator, bound_constant, detect_special_class
from .truncation import CutoffSpec, embed_constant, stopping_monitor, theta, theta_prime

__all__ = [
    "ConfigError", "ConvergenceError", "OracleError",
    "SpatialField", "SpectralField",
    "MildProblem", "fixed_point_solve", "picard_apply",
    "NoisePath", "sample_path", "zero_path",
    "SolverConfig", "Trajectory", "integrate", "step_ito_exp_em", "step_strat_heun",
    "TorusGrid",
    "TransportOperator", "bound_constant", "detect_special_class",
    "CutoffSpec", "embed_constant", "stopping_monitor", "theta", "theta_prime",
]

__version__ = "0.1.0"
