"""Exact differential-polynomial algebra and the mKdV hierarchy."""

from .algebra import (
    DEFAULT_ORDER_CAP,
    BivectorDiffPoly,
    DerivativeOrderError,
    ScalarDiffPoly,
    VectorDiffPoly,
    dot,
    interior,
    v,
    wedge,
)
from .hierarchy import CompiledPolynomial, HierarchyLevel, constant_curvature_shift, evaluate, generate_hierarchy
from .operators import (
    MIXED,
    NotExact,
    commutator,
    euler_operator,
    formal_integral,
    frechet,
    hamiltonian_from_covector,
    integrate_bivector,
    iterate_derivative,
    normal_form,
    op_H,
    op_J,
    op_R,
    partial,
    scaling_weight,
    total_derivative,
)
from .text import SECTOR_SYMBOLS, ParseError, from_text, scalar_specialization, scalar_text, to_text

__all__ = [name for name in dir() if not name.startswith("_")]
