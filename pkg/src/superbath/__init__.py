"""Classical simulator and verification suite for super-bath dissipative ground-state preparation."""
from . import channels, coarse, core, dynamics, nuclear, solver, spectral, verify
from .core import build_operator_set, eigendecompose, preset_hamiltonian
from .solver import SqeConfig, run_sqe
from .spectral import super_ohmic_density, superbath

__version__ = "0.1.0"

__all__ = [
    "channels", "coarse", "core", "dynamics", "nuclear", "solver", "spectral", "verify",
    "build_operator_set", "eigendecompose", "preset_hamiltonian", "SqeConfig", "run_sqe",
    "super_ohmic_density", "superbath",
]
