"""Derivation, variational derivative, formal integration and the J/H/R operators."""

from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from itertools import combinations_with_replacement

from .algebra import (
    DEFAULT_ORDER_CAP,
    BivectorDiffPoly,
    DerivativeOrderError,
    Mono,
    ScalarDiffPoly,
    VectorDiffPoly,
    dot,
    interior,
    mono_degree,
    mono_mul,
    mono_orders,
    mono_weight,
    pair,
    v,
    wedge,
)


class NotExact(ArithmeticError):
    """The expression is not a total derivative, so it has no formal integral."""


def _check_cap(order: int, cap: int) -> None:
    if order > cap:
        raise DerivativeOrderError(f"derivative order {order} exceeds cap {cap}")


def _d_mono(m: Mono, cap: int):
    """Leibniz rule on a product of invariants: yields (monomial, multiplicity)."""
    for idx, (i, j) in enumerate(m):
        rest = m[:idx] + m[idx + 1 :]
        _check_cap(max(i, j) + 1, cap)
        yield mono_mul(rest, (pair(i + 1, j),)), 1
        yield mono_mul(rest, (pair(i, j + 1),)), 1


def total_derivative(p, cap: int = DEFAULT_ORDER_CAP):
    """Formal arclength derivative ``D`` (raises every weight by one)."""
    if isinstance(p, ScalarDiffPoly):
        return ScalarDiffPoly(
            (dm, c * k) for m, c in p.items() for dm, k in _d_mono(m, cap)
        )
    if isinstance(p, VectorDiffPoly):
        out = []
        for (m, j), c in p.items():
            _check_cap(j + 1, cap)
            out.append(((m, j + 1), c))
            out.extend(((dm, j), c * k) for dm, k in _d_mono(m, cap))
        return VectorDiffPoly(out)
    if isinstance(p, BivectorDiffPoly):
        out = []
        for (m, (a, b)), c in p.items():
            _check_cap(b + 1, cap)
            out.append(((m, (a + 1, b)), c))
            out.append(((m, (a, b + 1)), c))
            out.extend(((dm, (a, b)), c * k) for dm, k in _d_mono(m, cap))
        return BivectorDiffPoly(out)
    raise TypeError(f"cannot differentiate {type(p).__name__}")


def iterate_derivative(p, times: int, cap: int = DEFAULT_ORDER_CAP):
    for _ in range(times):
        p = total_derivative(p, cap)
    return p


def partial(p: ScalarDiffPoly, k: int) -> VectorDiffPoly:
    """Gradient of ``p`` with respect to the vector ``v_k`` (both slots of each invariant)."""
    out = []
    for m, c in p.items():
        for idx, (i, j) in enumerate(m):
            rest = m[:idx] + m[idx + 1 :]
            if i == k:
                out.append(((rest, j), c))
            if j == k:
                out.append(((rest, i), c))
    return VectorDiffPoly(out)


def euler_operator(h: ScalarDiffPoly, cap: int = DEFAULT_ORDER_CAP) -> VectorDiffPoly:
    """Variational derivative ``sum_k (-D)^k dh/dv_k``."""
    total = VectorDiffPoly()
    for k in range(h.max_order() + 1):
        term = partial(h, k)
        for _ in range(k):
            term = -total_derivative(term, cap)
        total = total + term
    return total


def formal_integral(p: ScalarDiffPoly, cap: int = DEFAULT_ORDER_CAP) -> ScalarDiffPoly:
    """Return ``q`` with ``D q = p`` and zero constant term.

    Uses the homotopy formula for exact differential polynomials, graded by
    degree in ``v``; raises :class:`NotExact` when ``p`` has a nonzero
    variational derivative.
    """
    if p.is_zero():
        return ScalarDiffPoly()
    if () in p.terms:
        raise NotExact("a nonzero constant is not a total derivative of a polynomial")
    if not euler_operator(p, cap).is_zero():
        raise NotExact("expression has a nonzero variational derivative")
    result = ScalarDiffPoly()
    for d, part in p.degree_parts().items():
        acc = ScalarDiffPoly()
        for k in range(1, part.max_order() + 1):
            g = partial(part, k)
            if g.is_zero():
                continue
            # sum_{j<k} <v_j, (-D)^{k-1-j} g>
            layer = g
            for j in range(k - 1, -1, -1):
                acc = acc + dot(v(j), layer)
                layer = -total_derivative(layer, cap)
        result = result + acc.scale(Fraction(1, d))
    if total_derivative(result, cap) != p:
        raise NotExact("homotopy integral failed the derivative check")
    return result


# --- exact linear algebra over Fractions -------------------------------------


def _scalar_monomials(weight: int, degree: int, max_order: int | None = None) -> list[Mono]:
    """All invariant monomials of the given weight and (even) degree."""
    if degree % 2 or degree < 0:
        return []
    npairs = degree // 2
    budget = weight - degree
    if budget < 0:
        return []
    top = budget if max_order is None else min(budget, max_order)
    pairs = [(i, j) for i in range(top + 1) for j in range(i, top + 1) if i + j <= budget]
    return [
        tuple(c)
        for c in combinations_with_replacement(sorted(pairs), npairs)
        if sum(i + j for i, j in c) == budget
    ]


def _solve_in_span(target: dict, columns: list[dict]) -> list[Fraction] | None:
    """Find x with sum_i x_i * columns[i] == target (sparse dicts), or None."""
    rows: list[tuple[object, dict, dict]] = []  # (pivot key, row, combination)
    for idx, col in enumerate(columns):
        row = dict(col)
        comb = {idx: Fraction(1)}
        for piv, prow, pcomb in rows:
            c = row.get(piv)
            if c:
                _axpy(row, -c, prow)
                _axpy(comb, -c, pcomb)
        if not row:
            continue
        piv = max(row, key=repr)
        c = row[piv]
        row = {k: val / c for k, val in row.items()}
        comb = {k: val / c for k, val in comb.items()}
        for i, (opiv, orow, ocomb) in enumerate(rows):
            oc = orow.get(piv)
            if oc:
                _axpy(orow, -oc, row)
                _axpy(ocomb, -oc, comb)
        rows.append((piv, row, comb))
    rem = dict(target)
    x: dict[int, Fraction] = defaultdict(Fraction)
    for piv, row, comb in rows:
        c = rem.get(piv)
        if c:
            _axpy(rem, -c, row)
            for k, val in comb.items():
                x[k] += c * val
    if rem:
        return None
    return [x.get(i, Fraction(0)) for i in range(len(columns))]


def _axpy(y: dict, a: Fraction, x: dict) -> None:
    for k, val in x.items():
        nv = y.get(k, Fraction(0)) + a * val
        if nv:
            y[k] = nv
        else:
            y.pop(k, None)


def _bivector_basis(weight: int, degree: int, max_order: int) -> list[BivectorDiffPoly]:
    out = []
    for a in range(max_order + 1):
        for b in range(a + 1, max_order + 1):
            rest_w = weight - (a + b + 2)
            for m in _scalar_monomials(rest_w, degree - 2, max_order):
                out.append(BivectorDiffPoly({(m, (a, b)): 1}))
    return out


def integrate_bivector(p: BivectorDiffPoly, cap: int = DEFAULT_ORDER_CAP) -> BivectorDiffPoly:
    """Formal integral of a bivector polynomial by an exact homogeneous ansatz."""
    result = BivectorDiffPoly()
    top = max(p.max_order() - 1, 0)
    for (w, d), part in p.homogeneous_parts().items():
        basis = _bivector_basis(w - 1, d, top)
        images = [total_derivative(b, cap).terms for b in basis]
        x = _solve_in_span(part.terms, images)
        if x is None:
            raise NotExact("bivector expression is not a total derivative")
        for coeff, b in zip(x, basis):
            if coeff:
                result = result + b.scale(coeff)
    return result


# --- Hamiltonian operators -----------------------------------------------------


def op_J(e_perp: VectorDiffPoly, cap: int = DEFAULT_ORDER_CAP) -> VectorDiffPoly:
    """Symplectic operator ``J e = D e + D^{-1}(<v, e>) v``."""
    return total_derivative(e_perp, cap) + formal_integral(dot(v(0), e_perp), cap) * v(0)


def op_H(varpi: VectorDiffPoly, cap: int = DEFAULT_ORDER_CAP) -> VectorDiffPoly:
    """Cosymplectic operator ``H w = D w + v _| D^{-1}(v ^ w)``."""
    return total_derivative(varpi, cap) + interior(v(0), integrate_bivector(wedge(v(0), varpi), cap))


def op_R(e_perp: VectorDiffPoly, cap: int = DEFAULT_ORDER_CAP) -> VectorDiffPoly:
    """Recursion operator ``R = H o J``."""
    return op_H(op_J(e_perp, cap), cap)


# --- integration by parts normal form ----------------------------------------


def _complexity(m: Mono) -> tuple:
    orders = sorted(mono_orders(m), reverse=True)
    return (orders[0] if orders else -1, tuple(orders), m)


def normal_form(h: ScalarDiffPoly, cap: int = DEFAULT_ORDER_CAP) -> ScalarDiffPoly:
    """Canonical representative of ``h`` modulo total derivatives.

    Within each (weight, degree) block the image of ``D`` is row reduced with
    pivots on the most complex monomials (highest derivative order first, then
    the full sorted order profile, then lexicographic), and ``h`` is reduced
    against it.  Two densities differ by a total derivative iff their normal
    forms agree.
    """
    out = ScalarDiffPoly()
    for (w, d), part in h.homogeneous_parts().items():
        if d == 0:
            out = out + part
            continue
        basis = _scalar_monomials(w - 1, d)
        rows: dict[Mono, dict] = {}
        for b in basis:
            row = total_derivative(ScalarDiffPoly({b: 1}), cap).terms
            row = _reduce(row, rows)
            if row:
                piv = max(row, key=_complexity)
                c = row[piv]
                rows[piv] = {k: val / c for k, val in row.items()}
        out = out + ScalarDiffPoly(_reduce(part.terms, rows))
    return out


def _reduce(vec: dict, rows: dict) -> dict:
    vec = dict(vec)
    while True:
        hits = [k for k in vec if k in rows]
        if not hits:
            return vec
        piv = max(hits, key=_complexity)
        _axpy(vec, -vec[piv], rows[piv])


def hamiltonian_from_covector(varpi: VectorDiffPoly, cap: int = DEFAULT_ORDER_CAP) -> ScalarDiffPoly:
    """Density ``H`` with variational derivative ``varpi``, in normal form.

    Homotopy for homogeneous functionals: ``H = sum_d <v, varpi_d>/(d+1)``.
    """
    h = ScalarDiffPoly()
    for d, part in varpi.degree_parts().items():
        h = h + dot(v(0), part).scale(Fraction(1, d + 1))
    h = normal_form(h, cap)
    if euler_operator(h, cap) != varpi:
        raise NotExact("covector is not a variational derivative")
    return h


def frechet(p: VectorDiffPoly, q: VectorDiffPoly, cap: int = DEFAULT_ORDER_CAP) -> VectorDiffPoly:
    """Directional derivative ``p'[q]`` of a vector field along the evolution ``v_t = q``."""
    out = VectorDiffPoly()
    dq = [q]
    for _ in range(p.max_order()):
        dq.append(total_derivative(dq[-1], cap))
    for (m, j), c in p.items():
        scal = ScalarDiffPoly({m: c})
        out = out + scal * dq[j]
        for idx, (a, b) in enumerate(m):
            rest = ScalarDiffPoly({m[:idx] + m[idx + 1 :]: c})
            dab = dot(dq[a], v(b)) + dot(v(a), dq[b])
            out = out + (rest * dab) * v(j)
    return out


def commutator(p: VectorDiffPoly, q: VectorDiffPoly, cap: int = DEFAULT_ORDER_CAP) -> VectorDiffPoly:
    """Lie bracket ``[p, q] = p'[q] - q'[p]`` of evolutionary vector fields."""
    return frechet(p, q, cap) - frechet(q, p, cap)


# --- weights ----------------------------------------------------------------


class _Mixed:
    __slots__ = ()

    def __repr__(self) -> str:
        return "MIXED"


MIXED = _Mixed()


def scaling_weight(p):
    """Common scaling weight of all terms (``v_j`` has weight ``1 + j``), or ``MIXED``.

    The zero polynomial is homogeneous of every weight; ``None`` is returned.
    """
    if isinstance(p, (list, tuple)):
        ws = set().union(*(q.weights() for q in p))
    else:
        ws = p.weights()
    if not ws:
        return None
    return ws.pop() if len(ws) == 1 else MIXED


__all__ = [
    "NotExact",
    "MIXED",
    "total_derivative",
    "iterate_derivative",
    "partial",
    "euler_operator",
    "formal_integral",
    "integrate_bivector",
    "op_J",
    "op_H",
    "op_R",
    "normal_form",
    "hamiltonian_from_covector",
    "frechet",
    "commutator",
    "scaling_weight",
    "mono_weight",
    "mono_degree",
]
