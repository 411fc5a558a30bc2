"""Consensus dynamics with a growing population: microscopic and kinetic solvers, diagnostics and oracles."""

from .growth import GrowthRate, PopulationPath, classify_growth, generalized_inverse, integrate_population
from .inflow import InflowProfile
from .kernels import InfluenceKernel, make_kernel
from .kinetic import WeightedParticleMeasure
from .micro import AgentEnsemble, SimConfig, Trajectory

__version__ = "0.1.0"

__all__ = [
    "AgentEnsemble",
    "GrowthRate",
    "InfluenceKernel",
    "InflowProfile",
    "PopulationPath",
    "SimConfig",
    "Trajectory",
    "WeightedParticleMeasure",
    "classify_growth",
    "generalized_inverse",
    "integrate_population",
    "make_kernel",
]
