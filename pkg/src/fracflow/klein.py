"""Skew-symmetric matrix realization of the curve-flow frame algebra in so(n+1).

A vector ``p`` in R^n sits in the first row/column of an (n+1)x(n+1) skew
matrix; rotations of the remaining n axes (the isotropy algebra so(n)) sit in
the lower-right block.  The h- and v-sectors use the same code with n -> m.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SKEW_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class KleinElement:
    dim: int
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=float)
        if self.dim < 1 or m.shape != (self.dim + 1, self.dim + 1):
            raise ValueError(f"expected a {(self.dim + 1,) * 2} matrix for dim={self.dim}, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must be finite")
        if np.max(np.abs(m + m.T), initial=0.0) > SKEW_TOL * max(1.0, np.max(np.abs(m))):
            raise ValueError("matrix is not skew-symmetric")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __add__(self, other: "KleinElement") -> "KleinElement":
        _same_dim(self, other)
        return KleinElement(self.dim, self.matrix + other.matrix)

    def __sub__(self, other: "KleinElement") -> "KleinElement":
        _same_dim(self, other)
        return KleinElement(self.dim, self.matrix - other.matrix)

    def __neg__(self) -> "KleinElement":
        return KleinElement(self.dim, -self.matrix)

    def __rmul__(self, c: float) -> "KleinElement":
        return KleinElement(self.dim, c * self.matrix)

    def distance(self, other: "KleinElement") -> float:
        _same_dim(self, other)
        return float(np.max(np.abs(self.matrix - other.matrix)))


@dataclass(frozen=True, eq=False)
class HVector:
    dim: int
    components: np.ndarray

    def __post_init__(self) -> None:
        c = np.array(self.components, dtype=float).reshape(-1)
        if c.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} components, got {c.shape[0]}")
        if not np.all(np.isfinite(c)):
            raise ValueError("components must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "components", c)

    @classmethod
    def of(cls, values) -> "HVector":
        values = np.asarray(values, dtype=float).reshape(-1)
        return cls(values.size, values)


def _same_dim(a: KleinElement, b: KleinElement) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def embed_p(p: HVector) -> KleinElement:
    """``[[0, p], [-p^T, 0]]``."""
    n = p.dim
    m = np.zeros((n + 1, n + 1))
    m[0, 1:] = p.components
    m[1:, 0] = -p.components
    return KleinElement(n, m)


def embed_rotation(block: np.ndarray) -> KleinElement:
    """Place an so(n) matrix in the lower-right block of so(n+1)."""
    block = np.asarray(block, dtype=float)
    n = block.shape[0]
    m = np.zeros((n + 1, n + 1))
    m[1:, 1:] = block
    return KleinElement(n, m)


def so_block(first_row, rest: np.ndarray | None = None) -> np.ndarray:
    """so(n) matrix ``[[0, w], [-w^T, Theta]]`` with ``w`` in R^(n-1)."""
    w = np.asarray(first_row, dtype=float).reshape(-1)
    n = w.size + 1
    b = np.zeros((n, n))
    b[0, 1:] = w
    b[1:, 0] = -w
    if rest is not None:
        b[1:, 1:] = rest
    return b


def ck_inner(a: KleinElement, b: KleinElement) -> float:
    """Cartan-Killing inner product ``1/2 tr(a^T b)``."""
    _same_dim(a, b)
    return 0.5 * float(np.trace(a.matrix.T @ b.matrix))


def bracket(a: KleinElement, b: KleinElement) -> KleinElement:
    _same_dim(a, b)
    c = a.matrix @ b.matrix - b.matrix @ a.matrix
    # exact skew part; the commutator of skew matrices is skew up to rounding
    return KleinElement(a.dim, 0.5 * (c - c.T))


def decompose(p: HVector) -> tuple[float, HVector]:
    """Split ``p`` into its component along ``(1, 0, ..., 0)`` and the normal rest."""
    return float(p.components[0]), HVector(p.dim - 1, p.components[1:])


def recompose(parallel: float, perp: HVector) -> HVector:
    return HVector.of(np.concatenate([[parallel], perp.components]))


# --- curve-flow parametrizations ------------------------------------------


def frame_x(n: int) -> KleinElement:
    """Tangent frame along the curve: the unit vector ``(1, 0)``."""
    e = np.zeros(n)
    e[0] = 1.0
    return embed_p(HVector(n, e))


def frame_y(e_par: float, e_perp) -> KleinElement:
    """Flow frame with tangential part ``e_par`` and normal part ``e_perp``."""
    return embed_p(HVector.of(np.concatenate([[e_par], np.atleast_1d(e_perp)])))


def connection_x(v) -> KleinElement:
    """Connection along the curve, carrying the principal normal ``v``."""
    return embed_rotation(so_block(v))


def connection_y(varpi, theta: np.ndarray | None = None) -> KleinElement:
    """Connection along the flow with normal part ``varpi`` and rotation ``theta``."""
    return embed_rotation(so_block(varpi, theta))


def perp_rotation(e_perp) -> KleinElement:
    """``[[0, 0], [0, [[0, e_perp], [-e_perp^T, 0]]]]``."""
    return embed_rotation(so_block(e_perp))


def bracket_identities(v, e_par: float, e_perp, varpi, theta: np.ndarray) -> dict[str, float]:
    """Max-abs residuals of the frame/connection bracket identities.

    Keys and the identities they test (``M(p)`` is :func:`embed_p`):

    ``frame``            [e_X, e_Y] = -perp_rotation(e_perp)
    ``normal_flow``      [Gamma_Y, e_X] = -M((0, varpi))
    ``curve_connection`` [Gamma_X, e_Y] = -M((-v.e_perp, e_par v))
    ``transport``        [Gamma_X, e_X] = -M((0, v))
    ``double_transport`` [Gamma_X, [Gamma_X, e_X]] = -|v|^2 M((1, 0))
    ``adjoint``          ad([Gamma_X, e_X]) e_X = -connection_x(v)
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    e_perp = np.atleast_1d(np.asarray(e_perp, dtype=float))
    varpi = np.atleast_1d(np.asarray(varpi, dtype=float))
    n = v.size + 1
    ex, ey = frame_x(n), frame_y(e_par, e_perp)
    gx, gy = connection_x(v), connection_y(varpi, theta)

    def m(first, rest):
        return embed_p(HVector.of(np.concatenate([[first], rest])))

    zero = np.zeros(n - 1)
    gxex = bracket(gx, ex)
    return {
        "frame": bracket(ex, ey).distance(-perp_rotation(e_perp)),
        "normal_flow": bracket(gy, ex).distance(-m(0.0, varpi)),
        "curve_connection": bracket(gx, ey).distance(-m(-float(v @ e_perp), e_par * v)),
        "transport": gxex.distance(-m(0.0, v)),
        "double_transport": bracket(gx, gxex).distance(-(float(v @ v)) * m(1.0, zero)),
        "adjoint": bracket(gxex, ex).distance(-connection_x(v)),
    }


def printed_normal_flow_residual(varpi, theta: np.ndarray, e_par: float, e_perp) -> float:
    """Residual of the literal reading ``[Gamma_Y, e_Y] = -M((0, varpi))``.

    Kept for the record: the commutator actually equals
    ``-M((-e_perp.varpi, e_par varpi + Theta e_perp))`` (sign conventions as
    in :func:`bracket`), so this is nonzero unless ``e_par = 1, e_perp = 0``.
    """
    e_perp = np.atleast_1d(np.asarray(e_perp, dtype=float))
    varpi = np.atleast_1d(np.asarray(varpi, dtype=float))
    lhs = bracket(connection_y(varpi, theta), frame_y(e_par, e_perp))
    rhs = -embed_p(HVector.of(np.concatenate([[0.0], varpi])))
    return lhs.distance(rhs)


def random_skew(rng: np.random.Generator, k: int) -> np.ndarray:
    a = rng.standard_normal((k, k))
    return a - a.T


def random_element(rng: np.random.Generator, n: int) -> KleinElement:
    return KleinElement(n, random_skew(rng, n + 1))
