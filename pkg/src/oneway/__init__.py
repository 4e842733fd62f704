"""Exact simulation of one-way quantum computation over rotation and CNOT patterns.

Graph states, adaptive measurement schedules, branch enumeration and the
local-unitary certificates relating intermediate measured states.
"""

from .compiler import Circuit, CircuitError, RegisterCapError, execute, stitch, verify_final
from .graph import Graph, graph_state
from .measurement import AngleSpec, BranchCapError, MeasurementSchedule, OutcomeRecord
from .patterns import Cnot, Rot
from .pauli import PauliString
from .statevector import StateVector

__version__ = "0.1.0"

__all__ = [
    "AngleSpec",
    "BranchCapError",
    "Circuit",
    "CircuitError",
    "Cnot",
    "Graph",
    "MeasurementSchedule",
    "OutcomeRecord",
    "PauliString",
    "RegisterCapError",
    "Rot",
    "StateVector",
    "execute",
    "graph_state",
    "stitch",
    "verify_final",
    "__version__",
]
