"""Levy-flight hydrodynamics of the spin excitations."""
from .fourier import DISPERSIONS, c_alpha, fourier_rate, fourier_solution, lattice_rate
from .master import (LevyParams, RegimeClass, ScalingPrediction, StiffnessError, classify_regime,
                     evolve_master_equation, golden_rule_rates, master_generator,
                     predicted_scaling)
from .quadrature import QuadratureError, cosine_transform
from .stable import StableDistribution, cached_stable, stable_density

__all__ = [
    "DISPERSIONS", "c_alpha", "fourier_rate", "fourier_solution", "lattice_rate",
    "LevyParams", "RegimeClass", "ScalingPrediction", "StiffnessError", "classify_regime",
    "evolve_master_equation", "golden_rule_rates", "master_generator", "predicted_scaling",
    "QuadratureError", "cosine_transform", "StableDistribution", "cached_stable", "stable_density",
]
