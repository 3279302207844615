"""Canonical text form of differential polynomials.

Grammar (``s`` is the sector symbol, ``v`` or ``w``)::

    expr   := ["-"] term (("+" | "-") term)*  |  "0"
    term   := [coeff "*"] factor ("*" factor)*  |  coeff
    coeff  := INT ["/" INT]
    factor := "<" s INT "," s INT ">" ["^" INT]   scalar invariant
            | s INT                               vector factor (at most one)
            | "[" s INT "," s INT "]"             wedge of two vectors (at most one)

Terms are printed in a fixed order so that the text of equal expressions is
byte-identical.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .algebra import BivectorDiffPoly, Mono, ScalarDiffPoly, VectorDiffPoly, mono_orders

SECTOR_SYMBOLS = {"h": "v", "v": "w"}


def _mono_text(m: Mono, s: str) -> list[str]:
    out = []
    i = 0
    while i < len(m):
        k = i
        while k < len(m) and m[k] == m[i]:
            k += 1
        a, b = m[i]
        f = f"<{s}{a},{s}{b}>"
        if k - i > 1:
            f += f"^{k - i}"
        out.append(f)
        i = k
    return out


def _coeff_text(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _term_text(c: Fraction, factors: list[str]) -> tuple[str, str]:
    sign = "-" if c < 0 else "+"
    a = abs(c)
    if not factors:
        return sign, _coeff_text(a)
    body = "*".join(factors)
    return sign, body if a == 1 else f"{_coeff_text(a)}*{body}"


def _mono_key(m: Mono) -> tuple:
    orders = sorted(mono_orders(m), reverse=True)
    return (-(orders[0] if orders else -1), tuple(-o for o in orders), m)


def to_text(p, symbol: str = "v") -> str:
    if isinstance(p, ScalarDiffPoly):
        items = sorted(p.items(), key=lambda kv: _mono_key(kv[0]))
        parts = [_term_text(c, _mono_text(m, symbol)) for m, c in items]
    elif isinstance(p, VectorDiffPoly):
        items = sorted(p.items(), key=lambda kv: (-kv[0][1], _mono_key(kv[0][0])))
        parts = [
            _term_text(c, _mono_text(m, symbol) + [f"{symbol}{j}"]) for (m, j), c in items
        ]
    elif isinstance(p, BivectorDiffPoly):
        items = sorted(p.items(), key=lambda kv: (-kv[0][1][1], -kv[0][1][0], _mono_key(kv[0][0])))
        parts = [
            _term_text(c, _mono_text(m, symbol) + [f"[{symbol}{a},{symbol}{b}]"])
            for (m, (a, b)), c in items
        ]
    else:
        raise TypeError(f"cannot serialize {type(p).__name__}")
    if not parts:
        return "0"
    first_sign, first = parts[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


class ParseError(ValueError):
    pass


def _factor_re(s: str) -> re.Pattern:
    q = re.escape(s)
    return re.compile(
        rf"<{q}(\d+),{q}(\d+)>(?:\^(\d+))?"
        rf"|\[{q}(\d+),{q}(\d+)\]"
        rf"|{q}(\d+)"
        rf"|(\d+(?:/\d+)?)"
    )


def from_text(text: str, kind: str = "auto", symbol: str = "v"):
    """Parse canonical text back into an expression.

    ``kind`` is ``"scalar"``, ``"vector"``, ``"bivector"`` or ``"auto"`` (decided
    by the factors present).
    """
    src = "".join(text.split())
    if not src:
        raise ParseError("empty expression")
    # split into signed terms at top level (no nesting deeper than <..> / [..])
    terms: list[tuple[int, str]] = []
    sign, buf, depth = 1, "", 0
    for i, ch in enumerate(src):
        if ch in "<[":
            depth += 1
        elif ch in ">]":
            depth -= 1
        if ch in "+-" and depth == 0:
            if buf:
                terms.append((sign, buf))
            elif i != 0:
                raise ParseError(f"dangling operator at position {i}")
            sign, buf = (1 if ch == "+" else -1), ""
            continue
        buf += ch
    if not buf:
        raise ParseError("expression ends with an operator")
    terms.append((sign, buf))

    fre = _factor_re(symbol)
    scalar, vector, bivec = [], [], []
    for sign, body in terms:
        coeff = Fraction(sign)
        mono: list[tuple[int, int]] = []
        vec = None
        wedge_ab = None
        for f in body.split("*"):
            mt = fre.fullmatch(f)
            if not mt:
                raise ParseError(f"bad factor {f!r}")
            a, b, p, wa, wb, vj, num = mt.groups()
            if a is not None:
                mono.extend([(int(a), int(b))] * int(p or 1))
            elif wa is not None:
                if wedge_ab is not None or vec is not None:
                    raise ParseError("more than one vector or wedge factor in a term")
                wedge_ab = (int(wa), int(wb))
            elif vj is not None:
                if vec is not None or wedge_ab is not None:
                    raise ParseError("more than one vector factor in a term")
                vec = int(vj)
            else:
                coeff *= Fraction(num)
        if vec is not None:
            vector.append(((tuple(mono), vec), coeff))
        elif wedge_ab is not None:
            bivec.append(((tuple(mono), wedge_ab), coeff))
        else:
            scalar.append((tuple(mono), coeff))
    if text.strip() == "0":
        return {"scalar": ScalarDiffPoly, "vector": VectorDiffPoly,
                "bivector": BivectorDiffPoly}.get(kind, ScalarDiffPoly)()
    kinds = [k for k, lst in (("scalar", scalar), ("vector", vector), ("bivector", bivec)) if lst]
    if len(kinds) != 1:
        raise ParseError(f"mixed term kinds {kinds}")
    if kind != "auto" and kinds[0] != kind:
        raise ParseError(f"expected a {kind} expression, found {kinds[0]}")
    if kinds[0] == "scalar":
        return ScalarDiffPoly(scalar)
    if kinds[0] == "vector":
        return VectorDiffPoly(vector)
    return BivectorDiffPoly(bivec)


def scalar_specialization(p) -> dict:
    """Collapse to one component: ``<v_a, v_b> -> u_a u_b``.

    Returns ``{orders: coeff}`` for scalars and ``{(orders, j): coeff}`` for
    vectors, where ``orders`` is the sorted multiset of derivative orders.
    """
    acc: dict = {}

    def add(key, c):
        acc[key] = acc.get(key, 0) + c
        if acc[key] == 0:
            del acc[key]

    if isinstance(p, ScalarDiffPoly):
        for m, c in p.items():
            add(tuple(sorted(mono_orders(m))), c)
    elif isinstance(p, VectorDiffPoly):
        for (m, j), c in p.items():
            add(tuple(sorted(mono_orders(m) + [j])), c)
    else:
        raise TypeError(f"cannot specialize {type(p).__name__}")
    return acc


def scalar_text(p, symbol: str = "u") -> str:
    """Text of :func:`scalar_specialization`, e.g. ``u3 + 3/2*u0^2*u1``."""
    spec = scalar_specialization(p)
    parts = []
    for orders, c in sorted(spec.items(), key=lambda kv: (-max(kv[0], default=-1), tuple(-o for o in kv[0]))):
        factors = []
        for o in sorted(set(orders), reverse=True):
            e = orders.count(o)
            factors.append(f"{symbol}{o}" + (f"^{e}" if e > 1 else ""))
        parts.append(_term_text(Fraction(c), factors))
    if not parts:
        return "0"
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out
