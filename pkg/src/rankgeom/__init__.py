"""Adjacency geometry of rectangular matrix spaces over finite fields."""

from .field import (
    GF,
    FieldAutomorphism,
    FieldDescriptor,
    FieldElement,
    apply_automorphism,
    automorphisms,
    list_elements,
    parse_field,
)
from .matrix import (
    Matrix,
    adjacency_chain,
    adjacent,
    distance,
    enumerate_matrices,
    enumerate_rank,
    rank,
    rank_normal_form,
    rank_one_factor,
)

__version__ = "0.1.0"
