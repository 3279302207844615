"""Exact O(N)-invariant differential polynomials in a vector variable.

``v_j`` stands for the ``j``-th arclength derivative of ``v``.  Scalars are
polynomials in the dot products ``<v_i, v_j>`` (``i <= j``) with rational
coefficients, vectors are scalars times a single ``v_j``, bivectors are scalars
times ``v_a ^ v_b`` (``a < b``).  The dot products are treated as independent
symbols (generic dimension), so equality is structural.
"""

from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping

Pair = tuple[int, int]
Mono = tuple[Pair, ...]

DEFAULT_ORDER_CAP = 12


class DerivativeOrderError(ValueError):
    """Raised when an operation would exceed the configured derivative-order cap."""


def _frac(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"coefficients must be exact rationals, got {type(c).__name__}")


def pair(i: int, j: int) -> Pair:
    if i < 0 or j < 0:
        raise ValueError("derivative orders are nonnegative")
    return (i, j) if i <= j else (j, i)


def mono_mul(a: Mono, b: Mono) -> Mono:
    return tuple(sorted(a + b))


def mono_weight(m: Mono) -> int:
    return sum(i + j + 2 for i, j in m)


def mono_degree(m: Mono) -> int:
    return 2 * len(m)


def mono_orders(m: Mono) -> list[int]:
    return [o for p in m for o in p]


def _collect(items: Iterable[tuple[object, Fraction]]) -> dict:
    acc: dict = defaultdict(Fraction)
    for key, c in items:
        acc[key] += c
    return {k: c for k, c in acc.items() if c != 0}


class _Poly:
    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping | Iterable = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        self._terms = _collect((self._norm_key(k), _frac(c)) for k, c in items)
        self._hash = None

    @staticmethod
    def _norm_key(key):
        raise NotImplementedError

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, int) and other == 0:
            return not self._terms
        if type(other) is not type(self):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((type(self).__name__, frozenset(self._terms.items())))
        return self._hash

    def __add__(self, other):
        if isinstance(other, int) and other == 0:
            return self
        if type(other) is not type(self):
            return NotImplemented
        return type(self)(list(self._terms.items()) + list(other._terms.items()))

    __radd__ = __add__

    def __neg__(self):
        return type(self)({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self + (-other)

    def scale(self, c):
        c = _frac(c)
        return type(self)({k: c * v for k, v in self._terms.items()})

    def max_order(self) -> int:
        """Highest derivative order present, -1 for constants and zero."""
        raise NotImplementedError

    def __repr__(self) -> str:
        from .text import to_text

        return f"{type(self).__name__}({to_text(self)!r})"


class ScalarDiffPoly(_Poly):
    """Polynomial in the invariants ``<v_i, v_j>``."""

    __slots__ = ()

    @staticmethod
    def _norm_key(key) -> Mono:
        return tuple(sorted(pair(*p) for p in key))

    @classmethod
    def dot(cls, i: int, j: int) -> "ScalarDiffPoly":
        return cls({(pair(i, j),): 1})

    @classmethod
    def const(cls, c) -> "ScalarDiffPoly":
        return cls({(): c})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if isinstance(other, ScalarDiffPoly):
            return ScalarDiffPoly(
                (mono_mul(a, b), ca * cb)
                for a, ca in self._terms.items()
                for b, cb in other._terms.items()
            )
        if isinstance(other, (VectorDiffPoly, BivectorDiffPoly)):
            return other.__rmul__(self)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, n: int) -> "ScalarDiffPoly":
        out = ScalarDiffPoly.const(1)
        for _ in range(n):
            out = out * self
        return out

    def max_order(self) -> int:
        return max((o for m in self._terms for o in mono_orders(m)), default=-1)

    def monomials(self) -> list[Mono]:
        return list(self._terms)

    def weights(self) -> set[int]:
        return {mono_weight(m) for m in self._terms}

    def degree_parts(self) -> dict[int, "ScalarDiffPoly"]:
        parts: dict[int, list] = defaultdict(list)
        for m, c in self._terms.items():
            parts[mono_degree(m)].append((m, c))
        return {d: ScalarDiffPoly(t) for d, t in parts.items()}

    def homogeneous_parts(self) -> dict[tuple[int, int], "ScalarDiffPoly"]:
        parts: dict[tuple[int, int], list] = defaultdict(list)
        for m, c in self._terms.items():
            parts[(mono_weight(m), mono_degree(m))].append((m, c))
        return {k: ScalarDiffPoly(t) for k, t in parts.items()}


class VectorDiffPoly(_Poly):
    """Sum of ``scalar monomial * v_j`` terms."""

    __slots__ = ()

    @staticmethod
    def _norm_key(key):
        m, j = key
        if j < 0:
            raise ValueError("derivative orders are nonnegative")
        return (tuple(sorted(pair(*p) for p in m)), int(j))

    @classmethod
    def basis(cls, j: int) -> "VectorDiffPoly":
        return cls({((), j): 1})

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if isinstance(other, ScalarDiffPoly):
            return VectorDiffPoly(
                ((mono_mul(a, m), j), ca * c)
                for a, ca in other._terms.items()
                for (m, j), c in self._terms.items()
            )
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, ScalarDiffPoly)):
            return self.__rmul__(other)
        return NotImplemented

    def max_order(self) -> int:
        return max(
            (max([j, *mono_orders(m)]) for m, j in self._terms),
            default=-1,
        )

    def weights(self) -> set[int]:
        return {mono_weight(m) + j + 1 for m, j in self._terms}

    def degree_parts(self) -> dict[int, "VectorDiffPoly"]:
        parts: dict[int, list] = defaultdict(list)
        for (m, j), c in self._terms.items():
            parts[mono_degree(m) + 1].append(((m, j), c))
        return {d: VectorDiffPoly(t) for d, t in parts.items()}

    def coefficient_of(self, j: int) -> ScalarDiffPoly:
        return ScalarDiffPoly((m, c) for (m, jj), c in self._terms.items() if jj == j)

    def vector_orders(self) -> list[int]:
        return sorted({j for _, j in self._terms}, reverse=True)


class BivectorDiffPoly(_Poly):
    """Sum of ``scalar monomial * (v_a ^ v_b)`` terms with ``a < b``."""

    __slots__ = ()

    def __init__(self, terms: Mapping | Iterable = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        fixed = []
        for (m, (a, b)), c in items:
            if a == b:
                continue
            if a > b:
                a, b, c = b, a, -_frac(c)
            fixed.append(((m, (a, b)), c))
        super().__init__(fixed)

    @staticmethod
    def _norm_key(key):
        m, (a, b) = key
        return (tuple(sorted(pair(*p) for p in m)), (int(a), int(b)))

    @classmethod
    def wedge_basis(cls, a: int, b: int) -> "BivectorDiffPoly":
        return cls({((), (a, b)): 1})

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if isinstance(other, ScalarDiffPoly):
            return BivectorDiffPoly(
                ((mono_mul(s, m), ab), cs * c)
                for s, cs in other._terms.items()
                for (m, ab), c in self._terms.items()
            )
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, ScalarDiffPoly)):
            return self.__rmul__(other)
        return NotImplemented

    def max_order(self) -> int:
        return max((max([b, *mono_orders(m)]) for m, (_, b) in self._terms), default=-1)

    def weights(self) -> set[int]:
        return {mono_weight(m) + a + b + 2 for m, (a, b) in self._terms}

    def homogeneous_parts(self) -> dict[tuple[int, int], "BivectorDiffPoly"]:
        parts: dict[tuple[int, int], list] = defaultdict(list)
        for (m, (a, b)), c in self._terms.items():
            parts[(mono_weight(m) + a + b + 2, mono_degree(m) + 2)].append(((m, (a, b)), c))
        return {k: BivectorDiffPoly(t) for k, t in parts.items()}


def v(j: int = 0) -> VectorDiffPoly:
    """The vector ``v_j``."""
    return VectorDiffPoly.basis(j)


def dot(a: VectorDiffPoly, b: VectorDiffPoly) -> ScalarDiffPoly:
    """Bilinear dot product of two vector polynomials."""
    return ScalarDiffPoly(
        (mono_mul(mono_mul(ma, mb), (pair(ja, jb),)), ca * cb)
        for (ma, ja), ca in a.items()
        for (mb, jb), cb in b.items()
    )


def wedge(a: VectorDiffPoly, b: VectorDiffPoly) -> BivectorDiffPoly:
    """``a ^ b = a (x) b - b (x) a``."""
    return BivectorDiffPoly(
        ((mono_mul(ma, mb), (ja, jb)), ca * cb)
        for (ma, ja), ca in a.items()
        for (mb, jb), cb in b.items()
    )


def interior(a: VectorDiffPoly, bv: BivectorDiffPoly) -> VectorDiffPoly:
    """Left contraction ``a _| (B (x) C - C (x) B) = (a.B) C - (a.C) B``."""
    out = []
    for (ma, ja), ca in a.items():
        for (m, (p, q)), c in bv.items():
            base = mono_mul(ma, m)
            out.append(((mono_mul(base, (pair(ja, p),)), q), ca * c))
            out.append(((mono_mul(base, (pair(ja, q),)), p), -ca * c))
    return VectorDiffPoly(out)
