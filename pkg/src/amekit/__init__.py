"""Mixed-radix qudit simulation and AME state construction and verification."""

from .linalg import DimensionError, StateVector
from .circuits import Circuit, Instruction, build_named, simulate
from .biunimodular import UnimodularVector, fixture
from .verify import is_ame, is_2unitary, lu_invariant_moment

__all__ = [
    "Circuit",
    "DimensionError",
    "Instruction",
    "StateVector",
    "UnimodularVector",
    "build_named",
    "fixture",
    "is_2unitary",
    "is_ame",
    "lu_invariant_moment",
    "simulate",
]
__version__ = "0.1.0"
