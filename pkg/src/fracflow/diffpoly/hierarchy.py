"""The mKdV hierarchy generated by the recursion operator, plus numeric evaluation."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .algebra import DEFAULT_ORDER_CAP, ScalarDiffPoly, VectorDiffPoly, v
from .operators import hamiltonian_from_covector, op_H, op_J
from .text import SECTOR_SYMBOLS, to_text


@dataclass(frozen=True)
class HierarchyLevel:
    k: int
    sector: str
    flow: VectorDiffPoly  # e_perp^(k)
    covector: VectorDiffPoly  # varpi^(k)
    hamiltonian: ScalarDiffPoly  # H^(k)

    @property
    def symbol(self) -> str:
        return SECTOR_SYMBOLS[self.sector]

    def as_text(self) -> dict[str, str]:
        s = self.symbol
        return {
            "flow": to_text(self.flow, s),
            "covector": to_text(self.covector, s),
            "hamiltonian": to_text(self.hamiltonian, s),
        }


@lru_cache(maxsize=8)
def _levels(k_max: int, cap: int) -> tuple[tuple[VectorDiffPoly, VectorDiffPoly, ScalarDiffPoly], ...]:
    e = v(1)
    w = v(0)
    out = [(e, w, hamiltonian_from_covector(w, cap))]
    for _ in range(k_max):
        w = op_J(e, cap)
        e = op_H(w, cap)
        out.append((e, w, hamiltonian_from_covector(w, cap)))
    return tuple(out)


def generate_hierarchy(levels: int, sector: str = "h", cap: int = DEFAULT_ORDER_CAP) -> list[HierarchyLevel]:
    """Levels ``0..levels`` of (flow, covector, Hamiltonian).

    ``varpi^(k+1) = J e^(k)``, ``e^(k+1) = H varpi^(k+1)`` from ``e^(0) = v_1``,
    ``varpi^(0) = v``.  Both sectors share the same expressions; only the
    printed symbol differs.
    """
    if sector not in SECTOR_SYMBOLS:
        raise ValueError(f"sector must be 'h' or 'v', got {sector!r}")
    if levels < 0:
        raise ValueError("levels must be nonnegative")
    if 2 * levels + 1 > cap:
        raise ValueError(f"{levels} levels need derivative order {2 * levels + 1} > cap {cap}")
    return [
        HierarchyLevel(k, sector, e, w, h) for k, (e, w, h) in enumerate(_levels(levels, cap))
    ]


def constant_curvature_shift(flow: VectorDiffPoly, level_k_flow: VectorDiffPoly, curvature_const) -> VectorDiffPoly:
    """``flow - c * level_k_flow``; ``c`` must be exact (int or Fraction)."""
    c = Fraction(curvature_const)
    if c == 0:
        return flow
    return flow - level_k_flow.scale(c)


def evaluate(expr, derivs: Sequence[np.ndarray]):
    """Evaluate an expression on sampled data.

    ``derivs[j]`` holds ``v_j`` with shape ``(..., components)``.  Scalars
    return shape ``(...)``, vectors ``(..., components)``.
    """
    cache: dict[tuple[int, int], np.ndarray] = {}

    def inv(a: int, b: int) -> np.ndarray:
        key = (a, b)
        if key not in cache:
            cache[key] = np.einsum("...c,...c->...", derivs[a], derivs[b])
        return cache[key]

    def mono_val(m):
        val = None
        for a, b in m:
            val = inv(a, b) if val is None else val * inv(a, b)
        return val

    base_shape = np.shape(derivs[0])[:-1]
    if isinstance(expr, ScalarDiffPoly):
        out = np.zeros(base_shape)
        for m, c in expr.items():
            mv = mono_val(m)
            out = out + float(c) * (1.0 if mv is None else mv)
        return out
    if isinstance(expr, VectorDiffPoly):
        out = np.zeros(np.shape(derivs[0]))
        for (m, j), c in expr.items():
            mv = mono_val(m)
            coef = float(c) if mv is None else float(c) * mv[..., None]
            out = out + coef * derivs[j]
        return out
    raise TypeError(f"cannot evaluate {type(expr).__name__}")


class CompiledPolynomial:
    """Float-coefficient evaluator for repeated numeric evaluation of one expression."""

    def __init__(self, expr):
        self.is_vector = isinstance(expr, VectorDiffPoly)
        if not self.is_vector and not isinstance(expr, ScalarDiffPoly):
            raise TypeError(f"cannot compile {type(expr).__name__}")
        items = expr.items()
        self.terms = []
        pairs = set()
        for key, c in items:
            m, j = key if self.is_vector else (key, None)
            pairs.update(m)
            self.terms.append((float(c), tuple(m), j))
        self.pairs = sorted(pairs)
        self.max_order = expr.max_order()
        self.orders = frozenset(o for p in pairs for o in p) | frozenset(
            j for _, _, j in self.terms if j is not None
        )

    def __call__(self, derivs: Sequence[np.ndarray]) -> np.ndarray:
        inv = {(a, b): np.sum(derivs[a] * derivs[b], axis=-1) for a, b in self.pairs}
        base = np.shape(derivs[0])
        out = np.zeros(base if self.is_vector else base[:-1])
        for c, m, j in self.terms:
            s = c
            for p in m:
                s = s * inv[p]
            if self.is_vector:
                out += (s[..., None] if m else s) * derivs[j]
            else:
                out += s
        return out
