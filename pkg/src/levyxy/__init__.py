"""Spin transport in long-range XY chains: exact quantum dynamics, Levy-flight
hydrodynamics and the fitting pipeline that connects them."""
from . import analysis, coupling, hydro, quantum, sampling
from .coupling import CouplingMatrix, IonChainSpec, build_ion_chain_matrix, build_power_law
from .fields import CorrelationField, read_field_csv, write_field_csv

__version__ = "0.1.0"

__all__ = [
    "analysis", "coupling", "hydro", "quantum", "sampling", "CouplingMatrix", "IonChainSpec",
    "build_ion_chain_matrix", "build_power_law", "CorrelationField", "read_field_csv",
    "write_field_csv", "__version__",
]
