"""Statevector VQE for Z2 lattice gauge theory with staggered fermions on a two-leg ladder."""
from .config import ExperimentConfig, validate_config
from .hamiltonian import ModelParams, total_hamiltonian
from .lattice import StaticCharges, build_ladder
from .pauli import PauliString, PauliSum

__all__ = ["ExperimentConfig", "ModelParams", "PauliString", "PauliSum", "StaticCharges",
           "build_ladder", "total_hamiltonian", "validate_config"]
