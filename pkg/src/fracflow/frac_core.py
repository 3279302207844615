"""Left Caputo derivatives with the lower terminal fixed at zero.

Two evaluation routes are provided: a closed form on power terms
``c * x**p`` and the L1 scheme on uniformly sampled data.  Order ``alpha == 1``
dispatches to ordinary integer calculus everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "FractionalOrder",
    "SampledFunction",
    "PowerTerm",
    "caputo_power",
    "caputo_sampled",
    "frac_differential_coeff",
    "l1_matrix",
    "fractional_integral_matrix",
    "caputo_axis",
]


@dataclass(frozen=True)
class FractionalOrder:
    """Order of a Caputo derivative, ``0 < alpha <= 1``."""

    alpha: float

    def __post_init__(self) -> None:
        a = float(self.alpha)
        if not math.isfinite(a) or not (0.0 < a <= 1.0):
            raise ValueError(f"fractional order must satisfy 0 < alpha <= 1, got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    @property
    def is_integer(self) -> bool:
        return self.alpha == 1.0


@dataclass(frozen=True)
class SampledFunction:
    """Samples ``values[k] = f(k * step)`` on a uniform grid starting at 0."""

    step: float
    values: tuple[float, ...]
    lower_terminal: float = 0.0

    def __post_init__(self) -> None:
        if self.lower_terminal != 0.0:
            raise ValueError("only the lower terminal 0 is supported")
        if not (self.step > 0.0):
            raise ValueError("step must be positive")
        vals = tuple(float(v) for v in self.values)
        if len(vals) < 3:
            raise ValueError("need at least 3 samples")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, f, step: float, count: int) -> "SampledFunction":
        x = step * np.arange(count)
        return cls(step=step, values=tuple(np.asarray(f(x), dtype=float)))

    @property
    def grid(self) -> np.ndarray:
        return self.step * np.arange(len(self.values))


@dataclass(frozen=True)
class PowerTerm:
    """``coefficient * x**exponent`` with a finite nonnegative exponent."""

    coefficient: float
    exponent: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.exponent) or self.exponent < 0:
            raise ValueError("exponent must be finite and nonnegative")


def _as_order(order) -> FractionalOrder:
    return order if isinstance(order, FractionalOrder) else FractionalOrder(order)


def caputo_power(order, term: PowerTerm, x: float) -> float:
    """Closed-form left Caputo derivative of ``term`` evaluated at ``x``."""
    a = _as_order(order).alpha
    if x < 0:
        raise ValueError("caputo_power is defined for x >= 0 only")
    c, p = term.coefficient, term.exponent
    if p == 0.0:
        return 0.0
    if a == 1.0:
        if p < 1.0 and x == 0.0:
            raise ZeroDivisionError("derivative of x**p (p < 1) is singular at 0")
        return c * p * x ** (p - 1.0)
    if p - a < 0 and x == 0.0:
        raise ZeroDivisionError(f"D^{a} x**{p} is singular at the lower terminal")
    return c * math.gamma(p + 1.0) / math.gamma(p + 1.0 - a) * x ** (p - a)


def frac_differential_coeff(order, x: float) -> float:
    """Factor ``x**(1 - alpha) / Gamma(2 - alpha)`` of the fractional differential of ``x``."""
    a = _as_order(order).alpha
    if x < 0:
        raise ValueError("x must be nonnegative")
    if a == 1.0:
        return 1.0
    return x ** (1.0 - a) / math.gamma(2.0 - a)


def _l1_weights(alpha: float, n: int) -> np.ndarray:
    j = np.arange(n, dtype=float)
    return (j + 1.0) ** (1.0 - alpha) - j ** (1.0 - alpha)


def caputo_sampled(order, f: SampledFunction, index: int) -> float:
    """Discrete Caputo derivative of sampled data at node ``index``.

    ``alpha < 1`` uses the L1 scheme (piecewise-linear history).  ``alpha == 1``
    uses second-order centered differences in the interior and second-order
    one-sided differences at the two ends.
    """
    a = _as_order(order).alpha
    vals = np.asarray(f.values)
    n = len(vals)
    if not (0 <= index < n):
        raise IndexError(f"index {index} outside grid of {n} samples")
    h = f.step
    if a == 1.0:
        if index == 0:
            return float((-3 * vals[0] + 4 * vals[1] - vals[2]) / (2 * h))
        if index == n - 1:
            return float((3 * vals[-1] - 4 * vals[-2] + vals[-3]) / (2 * h))
        return float((vals[index + 1] - vals[index - 1]) / (2 * h))
    if index < 1:
        raise IndexError("the L1 derivative needs index >= 1 (no history at the lower terminal)")
    diffs = np.diff(vals[: index + 1])
    b = _l1_weights(a, index)[::-1]
    return float(h ** (-a) / math.gamma(2.0 - a) * np.dot(b, diffs))


@lru_cache(maxsize=64)
def _l1_matrix_cached(alpha: float, count: int, step: float) -> np.ndarray:
    b = _l1_weights(alpha, count)
    # row n: sum_{k<n} b[n-1-k] (f[k+1] - f[k])
    m = np.zeros((count, count))
    for n in range(1, count):
        w = b[:n][::-1]
        m[n, 1 : n + 1] += w
        m[n, 0:n] -= w
    m *= step ** (-alpha) / math.gamma(2.0 - alpha)
    m.setflags(write=False)
    return m


def l1_matrix(order, count: int, step: float) -> np.ndarray:
    """Dense lower-triangular L1 operator; row 0 is zero (the value at the terminal)."""
    return _l1_matrix_cached(_as_order(order).alpha, int(count), float(step))


@lru_cache(maxsize=64)
def _frac_integral_cached(beta: float, count: int, step: float) -> np.ndarray:
    # product trapezoid for I^beta g(x_n) = 1/Gamma(beta) int_0^x_n (x_n - s)^(beta-1) g(s) ds
    m = np.zeros((count, count))
    c = step**beta / math.gamma(beta + 2.0)
    for n in range(1, count):
        k = np.arange(1, n)
        m[n, 0] = (n - 1) ** (beta + 1) - (n - 1 - beta) * n**beta
        m[n, k] = (n - k + 1) ** (beta + 1) - 2.0 * (n - k) ** (beta + 1) + (n - k - 1) ** (beta + 1)
        m[n, n] = 1.0
    m *= c
    m.setflags(write=False)
    return m


def fractional_integral_matrix(beta: float, count: int, step: float) -> np.ndarray:
    """Riemann-Liouville integral of order ``beta > 0`` by product trapezoid quadrature.

    Exact for piecewise-linear data; second-order accurate for smooth data.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    return _frac_integral_cached(float(beta), int(count), float(step))


def caputo_axis(order, values: np.ndarray, step: float, axis: int = 0) -> np.ndarray:
    """Apply :func:`caputo_sampled` at every node along ``axis`` of an array.

    For ``alpha < 1`` the value at the lower terminal is 0, the limit of the
    Caputo integral over an empty interval.
    """
    a = _as_order(order).alpha
    values = np.asarray(values, dtype=float)
    if values.shape[axis] < 3:
        raise ValueError("need at least 3 samples along the derivative axis")
    if a == 1.0:
        return np.gradient(values, step, axis=axis, edge_order=2)
    m = l1_matrix(a, values.shape[axis], step)
    moved = np.moveaxis(values, axis, -1)
    return np.moveaxis(moved @ m.T, -1, axis)
