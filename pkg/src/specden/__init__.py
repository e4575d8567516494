"""Limiting spectral distributions of information-plus-noise sample covariance matrices."""

from .measure import JointMeasure, dozier_silverstein, make_measure, marchenko_pastur
from .solver import SolverOptions, SolveResult, solve_at, solve_many, solve_path
from .density import density_at, density_grid, density_on
from .support import SupportResult, find_support
from .simulator import ModelSpec, SpectralSample, sample_eigenvalues
from .compare import kolmogorov_distance, levy_distance

__version__ = "0.1.0"

__all__ = [
    "JointMeasure",
    "ModelSpec",
    "SolveResult",
    "SolverOptions",
    "SpectralSample",
    "SupportResult",
    "density_at",
    "density_grid",
    "density_on",
    "dozier_silverstein",
    "find_support",
    "kolmogorov_distance",
    "levy_distance",
    "make_measure",
    "marchenko_pastur",
    "sample_eigenvalues",
    "solve_at",
    "solve_many",
    "solve_path",
]
