"""Exact quantum dynamics of the long-range XY chain in fixed-magnetisation sectors."""
from .basis import SectorBasis, build_sector_basis, config_from_spins, sector_dimension, spins_from_config
from .evolution import (EvolutionEngine, KrylovConvergenceError, Propagator, QuantumState,
                        evolve)
from .hamiltonian import SectorHamiltonian, apply_hamiltonian
from .traces import (full_trace_correlation, measure_sigma_z, single_excitation_profile,
                     typicality_trace)

__all__ = [
    "SectorBasis", "build_sector_basis", "config_from_spins", "sector_dimension",
    "spins_from_config", "EvolutionEngine", "KrylovConvergenceError", "Propagator",
    "QuantumState", "evolve", "SectorHamiltonian", "apply_hamiltonian",
    "full_trace_correlation", "measure_sigma_z", "single_excitation_profile",
    "typicality_trace",
]
