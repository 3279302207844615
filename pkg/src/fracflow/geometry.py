"""Grid-sampled N-adapted geometry: frames, canonical d-connection, torsion, curvature.

Index conventions.  Frame indices run over ``0..n+m-1``; the first ``n`` are
horizontal (``e_j = d_j - N_j^a d_a``), the rest vertical (``e_b = d_b``).
``Gamma[t, b, c]`` is the coefficient of ``e_t`` in ``D_{e_c} e_b`` (last index
is the direction).  ``W[t, b, c]`` are the structure functions
``[e_b, e_c] = W^t_bc e_t``.  Field arrays carry their component axes first and
the grid axes last.  Partial derivatives are Caputo derivatives from
:mod:`fracflow.frac_core`; ``alpha = 1`` is ordinary calculus.
"""

from __future__ import annotations

import io
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .frac_core import FractionalOrder, caputo_axis

COND_LIMIT = 1e10
DET_LIMIT = 1e-10
STENCIL = 2  # nodes excluded at each end of every axis


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class ChartSpec:
    n: int
    m: int
    steps: tuple[float, ...]
    counts: tuple[int, ...]
    order: FractionalOrder = field(default_factory=lambda: FractionalOrder(1.0))

    def __post_init__(self) -> None:
        if self.n < 1 or self.m < 1:
            raise GeometryError("need n >= 1 and m >= 1")
        d = self.n + self.m
        steps = tuple(float(s) for s in self.steps)
        counts = tuple(int(c) for c in self.counts)
        if len(steps) != d or len(counts) != d:
            raise GeometryError(f"need {d} steps and counts")
        if any(s <= 0 for s in steps):
            raise GeometryError("all steps must be positive")
        if any(c < 5 for c in counts):
            raise GeometryError("all counts must be >= 5")
        order = self.order if isinstance(self.order, FractionalOrder) else FractionalOrder(self.order)
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "order", order)

    @property
    def dim(self) -> int:
        return self.n + self.m

    @property
    def shape(self) -> tuple[int, ...]:
        return self.counts

    def axes(self) -> list[np.ndarray]:
        return [s * np.arange(c) for s, c in zip(self.steps, self.counts)]

    def coordinates(self) -> list[np.ndarray]:
        """Meshgrid of all coordinates, ``x^1..x^n`` then ``y^1..y^m``."""
        return np.meshgrid(*self.axes(), indexing="ij")

    def interior_mask(self, width: int = STENCIL) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[tuple(slice(width, c - width) for c in self.counts)] = True
        return mask

    def node_index(self, coords) -> tuple[int, ...]:
        idx = []
        for x, s, c in zip(coords, self.steps, self.counts):
            k = int(round(x / s))
            if abs(k * s - x) > 1e-9 * max(1.0, abs(x)) or not 0 <= k < c:
                raise GeometryError(f"coordinate {x} is not a grid node")
            idx.append(k)
        return tuple(idx)


@dataclass(frozen=True, eq=False)
class NConnection:
    """``coeffs[i, a, *grid] = N_i^a``."""

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=float)
        if not np.all(np.isfinite(c)):
            raise GeometryError("N-connection coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, chart: ChartSpec) -> "NConnection":
        return cls(np.zeros((chart.n, chart.m, *chart.shape)))


def _check_block(g: np.ndarray, name: str) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.shape[0] != g.shape[1]:
        raise GeometryError(f"{name} block must be square")
    if not np.all(np.isfinite(g)):
        raise GeometryError(f"{name} block has non-finite entries")
    if np.max(np.abs(g - np.swapaxes(g, 0, 1)), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(g))):
        raise GeometryError(f"{name} block is not symmetric")
    node_major = np.moveaxis(g, (0, 1), (-2, -1))
    if np.min(np.abs(np.linalg.det(node_major)), initial=np.inf) <= DET_LIMIT:
        raise GeometryError(f"{name} block is singular at some node")
    return g


@dataclass(frozen=True, eq=False)
class DMetric:
    """Block-diagonal metric in the N-adapted frame: ``h[j, k, *grid]``, ``v[b, c, *grid]``."""

    h: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "h", _check_block(self.h, "h"))
        object.__setattr__(self, "v", _check_block(self.v, "v"))

    def full(self) -> np.ndarray:
        n, m = self.h.shape[0], self.v.shape[0]
        g = np.zeros((n + m, n + m, *self.h.shape[2:]))
        g[:n, :n] = self.h
        g[n:, n:] = self.v
        return g


@dataclass(frozen=True, eq=False)
class DConnection:
    """Coefficients ``Gamma[t, b, c]`` with the d-connection block structure."""

    n: int
    m: int
    gamma: np.ndarray

    @property
    def L_h(self) -> np.ndarray:
        """``L^i_jk``."""
        n = self.n
        return self.gamma[:n, :n, :n]

    @property
    def L_v(self) -> np.ndarray:
        """``L^a_bk``."""
        n = self.n
        return self.gamma[n:, n:, :n]

    @property
    def C_h(self) -> np.ndarray:
        """``C^i_jc``."""
        n = self.n
        return self.gamma[:n, :n, n:]

    @property
    def C_v(self) -> np.ndarray:
        """``C^a_bc``."""
        n = self.n
        return self.gamma[n:, n:, n:]


@dataclass(frozen=True, eq=False)
class CurvatureBundle:
    torsion: np.ndarray  # T[t, b, c]
    curvature: np.ndarray  # R[t, b, c, d]
    ricci: np.ndarray  # Ric[a, b]
    scalar: np.ndarray  # sR = hR + vS
    h_scalar: np.ndarray
    v_scalar: np.ndarray
    einstein: np.ndarray  # G[a, b]
    mask: np.ndarray  # nodes where the values are meaningful


# --- derivatives ---------------------------------------------------------------


def partial_derivatives(chart: ChartSpec, values: np.ndarray) -> np.ndarray:
    """Caputo partials along every coordinate: result ``[mu, *values.shape]``."""
    values = np.asarray(values, dtype=float)
    g = len(chart.shape)
    if values.shape[-g:] != chart.shape:
        raise GeometryError(f"field shape {values.shape} does not end with grid {chart.shape}")
    offset = values.ndim - g
    out = np.empty((chart.dim, *values.shape))
    for mu in range(chart.dim):
        out[mu] = caputo_axis(chart.order, values, chart.steps[mu], axis=offset + mu)
    return out


def frame_derivatives(chart: ChartSpec, N: NConnection, values: np.ndarray) -> np.ndarray:
    """``e_beta(values)`` for every frame direction: result ``[beta, *values.shape]``."""
    p = partial_derivatives(chart, values)
    n = chart.n
    comp = np.asarray(values).ndim - len(chart.shape)
    nc = N.coeffs.reshape(N.coeffs.shape[:2] + (1,) * comp + chart.shape)
    out = p.copy()
    for j in range(n):
        out[j] = p[j] - np.einsum("a...,a...->...", nc[j], p[n:])
    return out


def n_adapted_derivative(chart: ChartSpec, N: NConnection, values: np.ndarray, direction: int, node) -> float:
    """``e_direction(values)`` at a grid node (tuple of indices).

    Raises :class:`IndexError` when the node is outside the grid or on the
    lower terminal of a fractional axis, where no history is available.
    """
    node = tuple(int(k) for k in node)
    if len(node) != chart.dim or any(not 0 <= k < c for k, c in zip(node, chart.counts)):
        raise IndexError(f"node {node} outside grid {chart.shape}")
    if not 0 <= direction < chart.dim:
        raise IndexError(f"direction {direction} outside 0..{chart.dim - 1}")
    if not chart.order.is_integer:
        axes = [direction] if direction >= chart.n else [direction, *range(chart.n, chart.dim)]
        if any(node[a] < 1 for a in axes):
            raise IndexError("fractional derivative undefined at the lower terminal")
    return float(frame_derivatives(chart, N, values)[direction][node])


def _inverse(block: np.ndarray) -> np.ndarray:
    node_major = np.moveaxis(block, (0, 1), (-2, -1))
    cond = np.linalg.cond(node_major)
    if np.max(cond) > COND_LIMIT:
        raise GeometryError(f"metric block condition number {np.max(cond):.3g} exceeds {COND_LIMIT:g}")
    return np.moveaxis(np.linalg.inv(node_major), (-2, -1), (0, 1))


# --- connection ----------------------------------------------------------------


def canonical_dconnection(chart: ChartSpec, N: NConnection, g: DMetric) -> DConnection:
    """Canonical metric-compatible d-connection of ``(N, g)``."""
    n, m = chart.n, chart.m
    gh, gv = g.h, g.v
    ih, iv = _inverse(gh), _inverse(gv)
    dgh = frame_derivatives(chart, N, gh)  # [beta, j, k]
    dgv = frame_derivatives(chart, N, gv)  # [beta, b, c]
    dN = frame_derivatives(chart, N, N.coeffs)  # [beta, k, a]
    eh = dgh[:n]
    ev_gh = dgh[n:]
    eh_gv = dgv[:n]
    ev_gv = dgv[n:]
    eN = dN[n:]  # [b, k, a] = e_b N_k^a

    gamma = np.zeros((n + m,) * 3 + chart.shape)
    # L^i_jk = 1/2 g^{ir} (e_k g_jr + e_j g_kr - e_r g_jk)
    s = 0.5 * (
        np.einsum("kjr...->jrk...", eh) + np.einsum("jkr...->jrk...", eh) - np.einsum("rjk...->jrk...", eh)
    )
    gamma[:n, :n, :n] = np.einsum("ir...,jrk...->ijk...", ih, s)
    # L^a_bk = e_b N_k^a + 1/2 g^{ac} (e_k g_bc - g_dc e_b N_k^d - g_db e_c N_k^d)
    t = (
        np.einsum("kbc...->bck...", eh_gv)
        - np.einsum("dc...,bkd...->bck...", gv, eN)
        - np.einsum("db...,ckd...->bck...", gv, eN)
    )
    gamma[n:, n:, :n] = np.einsum("bka...->abk...", eN) + 0.5 * np.einsum("ac...,bck...->abk...", iv, t)
    # C^i_jc = 1/2 g^{ik} e_c g_jk
    gamma[:n, :n, n:] = 0.5 * np.einsum("ik...,cjk...->ijc...", ih, ev_gh)
    # C^a_bc = 1/2 g^{ad} (e_c g_bd + e_b g_cd - e_d g_bc)
    u = 0.5 * (
        np.einsum("cbd...->bdc...", ev_gv) + np.einsum("bcd...->bdc...", ev_gv) - np.einsum("dbc...->bdc...", ev_gv)
    )
    gamma[n:, n:, n:] = np.einsum("ad...,bdc...->abc...", iv, u)
    return DConnection(n, m, gamma)


def levi_civita(chart: ChartSpec, N: NConnection, g: DMetric) -> np.ndarray:
    """Christoffel symbols of the d-metric written in coordinates (test-only variant).

    Returns ``Gamma[t, b, c]`` in the coordinate basis ``d_mu``, with Caputo
    partials in place of ordinary ones.
    """
    n = chart.n
    Nc = N.coeffs
    G = np.zeros((chart.dim, chart.dim, *chart.shape))
    G[:n, :n] = g.h + np.einsum("ia...,jb...,ab...->ij...", Nc, Nc, g.v)
    G[:n, n:] = np.einsum("ib...,ab...->ia...", Nc, g.v)
    G[n:, :n] = np.swapaxes(G[:n, n:], 0, 1)
    G[n:, n:] = g.v
    inv = _inverse(G)
    dG = partial_derivatives(chart, G)  # [mu, a, b]
    s = 0.5 * (
        np.einsum("cbr...->brc...", dG) + np.einsum("bcr...->brc...", dG) - np.einsum("rbc...->brc...", dG)
    )
    return np.einsum("tr...,brc...->tbc...", inv, s)


# --- torsion and curvature ----------------------------------------------------


def frame_matrix(chart: ChartSpec, N: NConnection) -> np.ndarray:
    """``E[beta, mu] = e_beta(u^mu)`` evaluated on the coordinate functions."""
    coords = np.stack(chart.coordinates())  # [mu, *grid]
    return frame_derivatives(chart, N, coords)


def anholonomy(chart: ChartSpec, N: NConnection) -> np.ndarray:
    """Structure functions ``W[t, b, c]`` from numerical frame commutators.

    ``[e_b, e_c](u^mu) = e_b(E[c, mu]) - e_c(E[b, mu])`` is re-expressed in
    the frame by solving against ``E`` node by node.  Nodes where ``E`` is
    singular (the fractional lower terminal) get ``W = 0`` and are outside
    every validity mask.
    """
    E = frame_matrix(chart, N)
    dE = frame_derivatives(chart, N, E)  # [b, c, mu] = e_b(E[c, mu])
    comm = dE - np.swapaxes(dE, 0, 1)  # [b, c, mu]
    Em = np.moveaxis(E, (0, 1), (-2, -1))  # [..., beta, mu]
    det = np.linalg.det(Em)
    good = np.abs(det) > 1e-12
    safe = np.where(good[..., None, None], Em, np.eye(chart.dim))
    # comm^mu = W^t E[t, mu]  ->  W = comm E^{-1}
    Einv = np.linalg.inv(safe)  # [..., mu, t]
    W = np.einsum("bcm...,...mt->tbc...", comm, Einv)
    return np.where(good, W, 0.0)


def torsion(chart: ChartSpec, N: NConnection, conn: DConnection, W: np.ndarray | None = None) -> np.ndarray:
    """``T[t, b, c] = Gamma[t, c, b] - Gamma[t, b, c] - W[t, b, c]``."""
    if W is None:
        W = anholonomy(chart, N)
    G = conn.gamma
    return np.swapaxes(G, 1, 2) - G - W


def curvature(chart: ChartSpec, N: NConnection, conn: DConnection, W: np.ndarray | None = None) -> np.ndarray:
    """``R[t, b, c, d]``, the ``e_t`` component of ``R(e_c, e_d) e_b``."""
    if W is None:
        W = anholonomy(chart, N)
    G = conn.gamma
    dG = frame_derivatives(chart, N, G)  # [c, t, b, d] = e_c Gamma[t, b, d]
    R = np.einsum("ctbd...->tbcd...", dG) - np.einsum("dtbc...->tbcd...", dG)
    R += np.einsum("sbd...,tsc...->tbcd...", G, G) - np.einsum("sbc...,tsd...->tbcd...", G, G)
    R -= np.einsum("scd...,tbs...->tbcd...", W, G)
    return R


def ricci_scalar_einstein(chart: ChartSpec, g: DMetric, R: np.ndarray):
    """Ricci, scalar ``sR = hR + vS``, the two partial scalars, and Einstein.

    ``Ric[a, b] = R[t, a, t, b]`` summed over ``t``.  For a d-connection the
    sum splits into the four h/v blocks.
    """
    n = chart.n
    ric = np.einsum("tatb...->ab...", R)
    ih, iv = _inverse(g.h), _inverse(g.v)
    hR = np.einsum("ij...,ij...->...", ih, ric[:n, :n])
    vS = np.einsum("ab...,ab...->...", iv, ric[n:, n:])
    sR = hR + vS
    G = ric - 0.5 * g.full() * sR
    return ric, sR, hR, vS, G


def curvature_bundle(chart: ChartSpec, N: NConnection, g: DMetric, conn: DConnection | None = None) -> CurvatureBundle:
    if conn is None:
        conn = canonical_dconnection(chart, N, g)
    W = anholonomy(chart, N)
    T = torsion(chart, N, conn, W)
    R = curvature(chart, N, conn, W)
    ric, sR, hR, vS, G = ricci_scalar_einstein(chart, g, R)
    return CurvatureBundle(T, R, ric, sR, hR, vS, G, validity_mask(chart))


def validity_mask(chart: ChartSpec) -> np.ndarray:
    """Interior nodes: curvature uses two nested first-derivative stencils."""
    return chart.interior_mask(STENCIL)


def sectional_curvature(g: DMetric, R: np.ndarray, i: int = 0, j: int = 1) -> np.ndarray:
    """Sectional curvature of the horizontal plane ``(e_i, e_j)``."""
    gf = g.full()
    num = np.einsum("t...,t...->...", gf[i], R[:, j, i, j])
    den = gf[i, i] * gf[j, j] - gf[i, j] ** 2
    return num / den


def metric_compatibility(chart: ChartSpec, N: NConnection, g: DMetric, conn: DConnection) -> np.ndarray:
    """``(D_c g)[a, b, c] = e_c g_ab - Gamma[t, a, c] g_tb - Gamma[t, b, c] g_at``."""
    gf = g.full()
    dg = frame_derivatives(chart, N, gf)  # [c, a, b]
    G = conn.gamma
    return (
        np.einsum("cab...->abc...", dg)
        - np.einsum("tac...,tb...->abc...", G, gf)
        - np.einsum("tbc...,at...->abc...", G, gf)
    )


# --- fixtures --------------------------------------------------------------


def flat_fixture(n: int = 2, m: int = 1, step: float = 0.1, count: int = 9, alpha: float = 1.0):
    chart = ChartSpec(n, m, (step,) * (n + m), (count,) * (n + m), FractionalOrder(alpha))
    shape = chart.shape
    g = DMetric(_eye_field(n, shape), _eye_field(m, shape))
    return chart, NConnection.zero(chart), g


def sphere_fixture(alpha: float = 1.0):
    """Stereographic 2-sphere in the h-block, flat one-dimensional v-block."""
    chart = ChartSpec(2, 1, (0.05, 0.05, 0.1), (13, 13, 5), FractionalOrder(alpha))
    x1, x2, _ = chart.coordinates()
    conf = 4.0 / (1.0 + x1**2 + x2**2) ** 2
    h = np.zeros((2, 2, *chart.shape))
    h[0, 0] = h[1, 1] = conf
    return chart, NConnection.zero(chart), DMetric(h, _eye_field(1, chart.shape))


def twisted_fixture(alpha: float = 1.0, twist: float = 0.5):
    """Non-integrable N-connection ``N_1^1 = twist * x2`` over a warped metric."""
    chart = ChartSpec(2, 1, (0.1, 0.1, 0.1), (9, 9, 9), FractionalOrder(alpha))
    x1, x2, y = chart.coordinates()
    Nc = np.zeros((2, 1, *chart.shape))
    Nc[0, 0] = twist * x2
    Nc[1, 0] = 0.2 * x1 * y
    h = np.zeros((2, 2, *chart.shape))
    h[0, 0] = 1.0 + 0.1 * x1**2 + 0.05 * y
    h[1, 1] = 1.0 + 0.1 * x2 * y
    h[0, 1] = h[1, 0] = 0.05 * x1 * x2
    v = (1.0 + 0.2 * x1 + 0.1 * y**2)[None, None]
    return chart, NConnection(Nc), DMetric(h, v)


def random_smooth_fixture(seed: int, n: int = 2, m: int = 1, alpha: float = 1.0, chart: ChartSpec | None = None):
    """Smooth random metric and N-connection built from low-order trigonometric modes.

    ``chart`` overrides the default 9-node, 0.1-step grid (its n, m and order win).
    """
    rng = np.random.default_rng(seed)
    if chart is None:
        chart = ChartSpec(n, m, (0.1,) * (n + m), (9,) * (n + m), FractionalOrder(alpha))
    n, m = chart.n, chart.m
    coords = chart.coordinates()

    def smooth(scale):
        k = rng.uniform(-1.0, 1.0, size=len(coords))
        ph = rng.uniform(0, 2 * np.pi)
        return scale * np.sin(sum(ki * c for ki, c in zip(k, coords)) + ph)

    def spd(k):
        a = np.zeros((k, k, *chart.shape))
        for i in range(k):
            a[i, i] = 1.0 + smooth(0.2)
            for j in range(i):
                a[i, j] = a[j, i] = smooth(0.1)
        return a

    Nc = np.stack([np.stack([smooth(0.3) for _ in range(m)]) for _ in range(n)])
    return chart, NConnection(Nc), DMetric(spd(n), spd(m))


FIXTURES = {
    "flat": flat_fixture,
    "sphere": sphere_fixture,
    "twisted": twisted_fixture,
}


def _eye_field(k: int, shape) -> np.ndarray:
    return np.broadcast_to(np.eye(k).reshape(k, k, *(1,) * len(shape)), (k, k, *shape)).copy()


# --- tabular I/O -------------------------------------------------------------


def _coord_names(n: int, m: int) -> list[str]:
    return [f"x{i + 1}" for i in range(n)] + [f"y{a + 1}" for a in range(m)]


def geometry_columns(n: int, m: int) -> list[str]:
    cols = [f"gh_{i + 1}{j + 1}" for i in range(n) for j in range(i, n)]
    cols += [f"gv_{a + 1}{b + 1}" for a in range(m) for b in range(a, m)]
    cols += [f"N_{i + 1}_{a + 1}" for i in range(n) for a in range(m)]
    return cols


def write_table(path, chart: ChartSpec, fields: dict[str, np.ndarray], comments: list[str] = ()) -> None:
    """One row per node (C order): coordinates, then the named fields."""
    coords = [c.reshape(-1) for c in chart.coordinates()]
    names = _coord_names(chart.n, chart.m) + list(fields)
    cols = coords + [np.broadcast_to(np.asarray(f, dtype=float), chart.shape).reshape(-1) for f in fields.values()]
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    buf.write(" ".join(names) + "\n")
    np.savetxt(buf, np.column_stack(cols), fmt="%.17g")
    Path(path).write_text(buf.getvalue())


def read_table(path) -> tuple[ChartSpec, dict[str, np.ndarray], dict[str, str]]:
    """Inverse of :func:`write_table`; ``# key = value`` comment lines become metadata."""
    text = Path(path).read_text()
    meta: dict[str, str] = {}
    lines = text.splitlines()
    body_start = 0
    for k, line in enumerate(lines):
        s = line.strip()
        if s.startswith("#"):
            if "=" in s:
                key, val = s[1:].split("=", 1)
                meta[key.strip()] = val.strip()
            continue
        if s:
            body_start = k
            break
    else:
        raise GeometryError("missing header line")
    header = lines[body_start].split()
    if not header or not header[0].startswith("x"):
        raise GeometryError("header line must start with coordinate columns x1..")
    xs = [h for h in header if h[0] == "x" and h[1:].isdigit()]
    ys = [h for h in header if h[0] == "y" and h[1:].isdigit()]
    n, m = len(xs), len(ys)
    if header[: n + m] != _coord_names(n, m):
        raise GeometryError("coordinate columns must be x1..xn y1..ym in order")
    data = np.loadtxt(io.StringIO("\n".join(lines[body_start + 1 :])), ndmin=2)
    if data.shape[1] != len(header):
        raise GeometryError(f"rows have {data.shape[1]} columns, header has {len(header)}")
    steps, counts = [], []
    for mu in range(n + m):
        vals = np.unique(data[:, mu])
        if vals[0] != 0.0:
            raise GeometryError("grid must start at the origin")
        d = np.diff(vals)
        if len(vals) < 2 or np.ptp(d) > 1e-9 * max(1.0, d.mean()):
            raise GeometryError(f"axis {header[mu]} is not uniform")
        steps.append(float(d.mean()))
        counts.append(len(vals))
    if data.shape[0] != int(np.prod(counts)):
        raise GeometryError("table does not cover the full grid")
    order = np.lexsort(tuple(data[:, mu] for mu in reversed(range(n + m))))
    data = data[order]
    alpha = float(meta.get("alpha", 1.0))
    chart = ChartSpec(n, m, tuple(steps), tuple(counts), FractionalOrder(alpha))
    fields = {name: data[:, k].reshape(chart.shape) for k, name in enumerate(header) if k >= n + m}
    return chart, fields, meta


def fixture_to_fields(chart: ChartSpec, N: NConnection, g: DMetric) -> dict[str, np.ndarray]:
    n, m = chart.n, chart.m
    out = {}
    for i, j in itertools.combinations_with_replacement(range(n), 2):
        out[f"gh_{i + 1}{j + 1}"] = g.h[i, j]
    for a, b in itertools.combinations_with_replacement(range(m), 2):
        out[f"gv_{a + 1}{b + 1}"] = g.v[a, b]
    for i in range(n):
        for a in range(m):
            out[f"N_{i + 1}_{a + 1}"] = N.coeffs[i, a]
    return out


def fields_to_fixture(chart: ChartSpec, fields: dict[str, np.ndarray]) -> tuple[NConnection, DMetric]:
    n, m = chart.n, chart.m
    missing = [c for c in geometry_columns(n, m) if c not in fields]
    if missing:
        raise GeometryError(f"missing columns: {', '.join(missing)}")
    h = np.zeros((n, n, *chart.shape))
    v = np.zeros((m, m, *chart.shape))
    for i, j in itertools.combinations_with_replacement(range(n), 2):
        h[i, j] = h[j, i] = fields[f"gh_{i + 1}{j + 1}"]
    for a, b in itertools.combinations_with_replacement(range(m), 2):
        v[a, b] = v[b, a] = fields[f"gv_{a + 1}{b + 1}"]
    Nc = np.zeros((n, m, *chart.shape))
    for i in range(n):
        for a in range(m):
            Nc[i, a] = fields[f"N_{i + 1}_{a + 1}"]
    return NConnection(Nc), DMetric(h, v)


def load_fixture(path) -> tuple[ChartSpec, NConnection, DMetric]:
    chart, fields, _ = read_table(path)
    N, g = fields_to_fixture(chart, fields)
    return chart, N, g


def save_fixture(path, chart: ChartSpec, N: NConnection, g: DMetric) -> None:
    write_table(path, chart, fixture_to_fields(chart, N, g), comments=[f"alpha = {chart.order.alpha!r}"])


def bundle_fields(chart: ChartSpec, bundle: CurvatureBundle) -> dict[str, np.ndarray]:
    """Scalar and Ricci/Einstein components as named fields (masked nodes are NaN)."""
    d = chart.dim
    names = _coord_names(chart.n, chart.m)
    out = {"valid": bundle.mask.astype(float), "sR": bundle.scalar, "hR": bundle.h_scalar, "vS": bundle.v_scalar}
    for a in range(d):
        for b in range(d):
            out[f"Ric_{names[a]}{names[b]}"] = bundle.ricci[a, b]
    for a in range(d):
        for b in range(d):
            out[f"G_{names[a]}{names[b]}"] = bundle.einstein[a, b]
    return {k: np.where(bundle.mask, v, np.nan) if k != "valid" else v for k, v in out.items()}
