"""Discrete Spencer complexes of compatible pairs and their sign-mirror invariants."""

from spencer_mirror.lie_core import DualElement, LieAlgebra, bracket, builtin_algebra, c_str
from spencer_mirror.symtensor import GradedSymElement, SymTensor
from spencer_mirror.spencer_op import SpencerOperatorMatrix, delta_matrix

__all__ = [
    "DualElement",
    "GradedSymElement",
    "LieAlgebra",
    "SpencerOperatorMatrix",
    "SymTensor",
    "bracket",
    "builtin_algebra",
    "c_str",
    "delta_matrix",
]

__version__ = "0.1.0"
