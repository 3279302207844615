"""Published hierarchy formulas, transcribed as expressions for fidelity checks.

The second mKdV flow appears in print with a trailing ``-1/2 <v1,v1> v``
term of scaling weight 5 (not 6), and with ``+|v1|^2`` inside its bracket
where ``R^2(v1)`` and the classical scalar fifth-order mKdV equation have
``-|v1|^2``.  Both readings are kept: the literal one and the corrected one.  Likewise
the printed second Hamiltonian has ``-1/2 <v0,v1>`` where the square is
meant.
"""

from __future__ import annotations

from fractions import Fraction as F

from .algebra import ScalarDiffPoly as S
from .algebra import v
from .operators import total_derivative as D

_vv = S.dot(0, 0)
_v1v1 = S.dot(1, 1)
_vv1 = S.dot(0, 1)


def first_flow():
    """``v3 + 3/2 |v|^2 v1``."""
    return v(3) + (_vv * v(1)).scale(F(3, 2))


def second_flow_literal():
    """Second flow as printed: ``+|v1|^2`` in the bracket and the weight-5 tail term."""
    return second_flow_printed_bracket() - (_v1v1 * v(0)).scale(F(1, 2))


def second_flow_corrected():
    """``v5 + 5/2 D(|v|^2 v2) + 5/2 (D^2|v|^2 - |v1|^2 + 3/4 |v|^4) v1``.

    The sign of ``|v1|^2`` is the one that reproduces the classical scalar
    fifth-order mKdV equation and the output of ``R^2(v1)``.
    """
    inner = D(D(_vv)) - _v1v1 + (_vv * _vv).scale(F(3, 4))
    return v(5) + D(_vv * v(2)).scale(F(5, 2)) + (inner * v(1)).scale(F(5, 2))


def second_flow_printed_bracket():
    """The printed bracket ``+|v1|^2`` with the tail dropped, for the record."""
    inner = D(D(_vv)) + _v1v1 + (_vv * _vv).scale(F(3, 4))
    return v(5) + D(_vv * v(2)).scale(F(5, 2)) + (inner * v(1)).scale(F(5, 2))


def hamiltonians_printed():
    """``H0, H1`` and ``H2`` with the squared ``<v, v1>`` term."""
    h0 = _vv.scale(F(1, 2))
    h1 = _v1v1.scale(F(-1, 2)) + (_vv * _vv).scale(F(1, 8))
    h2 = (
        S.dot(2, 2).scale(F(1, 2))
        - (_vv * _v1v1).scale(F(3, 4))
        - (_vv1 * _vv1).scale(F(1, 2))
        + (_vv ** 3).scale(F(1, 16))
    )
    return [h0, h1, h2]


def second_hamiltonian_literal():
    """``H2`` with the printed linear ``-1/2 <v, v1>`` term (mixed weight)."""
    h2 = hamiltonians_printed()[2]
    return h2 + (_vv1 * _vv1).scale(F(1, 2)) - _vv1.scale(F(1, 2))
