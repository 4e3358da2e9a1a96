"""Fixed-state variational fast-forwarding on a dense statevector simulator.

Diagonalize a short-time evolution unitary only on the subspace the initial
state spans, then reach arbitrary times by rescaling the diagonal phases at
constant circuit depth.
"""

__version__ = "0.1.0"

from .ansatz import (
    DiagonalAnsatz,
    FsvffAnsatz,
    apply_v,
    diagonal_unitary,
    hardware_xy_ansatz,
)
from .cost import TrainingSet, cost_global, cost_local, cost_randomized
from .gramian import find_neig
from .hamiltonian import PauliSum, TrotterSpec, build_fermi_hubbard, build_xy
from .statevector import Circuit, Gate, QuantumState, basis_state, zero_state

__all__ = [
    "__version__",
    "DiagonalAnsatz",
    "FsvffAnsatz",
    "apply_v",
    "diagonal_unitary",
    "hardware_xy_ansatz",
    "TrainingSet",
    "cost_global",
    "cost_local",
    "cost_randomized",
    "find_neig",
    "PauliSum",
    "TrotterSpec",
    "build_fermi_hubbard",
    "build_xy",
    "Circuit",
    "Gate",
    "QuantumState",
    "basis_state",
    "zero_state",
]
