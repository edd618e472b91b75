"""Symmetry-respecting variational circuits and learned equivariant embeddings."""

from eqvqc.tensor_core import commutator_norm, herm_expm, kron, unitarity_check
from eqvqc.simulator import PauliObservable, apply_unitary, expectation, init_state, pauli_matrix
from eqvqc.groups import (
    GroupElement,
    GroupPresentation,
    Representation,
    enumerate_group,
    is_invariant,
    perm_to_swap_network,
    rep_matrix,
    twirl,
)

__version__ = "0.1.0"

__all__ = [
    "GroupElement",
    "GroupPresentation",
    "PauliObservable",
    "Representation",
    "apply_unitary",
    "commutator_norm",
    "enumerate_group",
    "expectation",
    "herm_expm",
    "init_state",
    "is_invariant",
    "kron",
    "pauli_matrix",
    "perm_to_swap_network",
    "rep_matrix",
    "twirl",
    "unitarity_check",
]
