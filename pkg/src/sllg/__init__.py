"""Pseudospectral simulator for the second-order regularized stochastic
Landau-Lifshitz-Gilbert equation on the flat torus."""

from .brownian import BrownianPath, refine_brownian, sample_brownian
from .config import RunConfig
from .initial_data import AnsatzSpec
from .integrator import SchemeConfig, Trajectory, integrate
from .model import ModelParams
from .spectral import SpectralCutoff, TorusGrid, VectorField

__all__ = [
    "AnsatzSpec",
    "BrownianPath",
    "ModelParams",
    "RunConfig",
    "SchemeConfig",
    "SpectralCutoff",
    "TorusGrid",
    "Trajectory",
    "VectorField",
    "integrate",
    "refine_brownian",
    "sample_brownian",
]
