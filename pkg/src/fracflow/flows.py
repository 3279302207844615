"""Method-of-lines integrators for the hierarchy flows on a 1-D arclength grid.

Levels 0, 1, 2 evolve ``v_tau = e^(k) - c * e^(k-1)`` with the polynomials
from :mod:`fracflow.diffpoly`, spatial derivatives replaced by a numerical
operator.  Level -1 evolves ``v_tau = -c * e_perp`` where ``(e_par, e_perp)``
is the unit frame solving ``D e_par = -<v, e_perp>``, ``D e_perp = e_par v``
from ``e_par(0) = 1, e_perp(0) = 0``.

Spatial operators:

* ``alpha = 1, spectral``: periodic Fourier derivative with a 2/3 dealiasing
  filter (default).
* ``alpha = 1, fd``: periodic fourth-order central differences.
* ``alpha < 1``: ``D^alpha f = I^(1-alpha) f'`` on ``[0, L)`` with lower
  terminal 0, where ``I`` is the product-trapezoid fractional integral and
  ``f'`` the Fourier derivative, plus an absorbing sponge at both ends.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .diffpoly import CompiledPolynomial, generate_hierarchy
from .frac_core import FractionalOrder, caputo_axis, fractional_integral_matrix

SPATIAL_MODES = ("spectral", "fd")


class FlowConfigError(ValueError):
    pass


class FlowNumericError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    order: FractionalOrder = field(default_factory=lambda: FractionalOrder(1.0))
    flow_level: int = 1
    curvature_const: float = 1.0
    dt: float = 1e-3
    t_end: float = 0.1
    node_count: int = 256
    domain_length: float = 2 * math.pi
    monitor_set: tuple[int, ...] = (0, 1)
    component_count: int = 1
    cfl_const: float = 0.1
    spatial: str = "spectral"
    sponge_strength: float = 10.0
    sponge_fraction: float = 0.05
    drift_tol: float = 1e-6
    output_every: int = 0  # steps between stored frames; 0 stores only the ends

    def __post_init__(self) -> None:
        if not isinstance(self.order, FractionalOrder):
            object.__setattr__(self, "order", FractionalOrder(self.order))
        object.__setattr__(self, "monitor_set", tuple(int(k) for k in self.monitor_set))
        if self.flow_level not in (-1, 0, 1, 2):
            raise FlowConfigError("flow_level must be one of -1, 0, 1, 2")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise FlowConfigError("dt must be positive")
        if not (self.t_end >= 0 and math.isfinite(self.t_end)):
            raise FlowConfigError("t_end must be nonnegative")
        if self.node_count < 8:
            raise FlowConfigError("node_count must be at least 8")
        if not self.domain_length > 0:
            raise FlowConfigError("domain_length must be positive")
        if self.component_count < 1:
            raise FlowConfigError("component_count must be positive")
        if self.spatial not in SPATIAL_MODES:
            raise FlowConfigError(f"spatial must be one of {SPATIAL_MODES}")
        if self.spatial == "fd" and not self.order.is_integer:
            raise FlowConfigError("the fd operator is only available for alpha = 1")
        if any(k < 0 or k > 4 for k in self.monitor_set):
            raise FlowConfigError("monitored Hamiltonian levels must lie in 0..4")
        if not 0 < self.sponge_fraction < 0.5:
            raise FlowConfigError("sponge_fraction must lie in (0, 0.5)")
        if self.output_every < 0:
            raise FlowConfigError("output_every must be nonnegative")
        q = self.derivative_order
        if self.flow_level >= 1 and self.dt > self.cfl_const * self.step**q * (1 + 1e-12):
            raise FlowConfigError(
                f"dt={self.dt:g} violates the stability guard dt <= {self.cfl_const:g}*h^{q} = "
                f"{self.cfl_const * self.step**q:g}"
            )

    @property
    def step(self) -> float:
        return self.domain_length / self.node_count

    @property
    def derivative_order(self) -> int:
        return {-1: 0, 0: 1, 1: 3, 2: 5}[self.flow_level]

    @property
    def periodic(self) -> bool:
        return self.order.is_integer and self.flow_level != -1

    @property
    def step_count(self) -> int:
        return int(math.ceil(self.t_end / self.dt - 1e-9)) if self.t_end > 0 else 0


@dataclass(frozen=True, eq=False)
class FlowState:
    tau: float
    step: float
    v: np.ndarray  # (nodes, components)
    e_par: np.ndarray | None = None
    e_perp: np.ndarray | None = None

    def __post_init__(self) -> None:
        v = np.array(self.v, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        object.__setattr__(self, "v", v)
        if self.e_par is not None:
            object.__setattr__(self, "e_par", np.array(self.e_par, dtype=float).reshape(-1))
            ep = np.array(self.e_perp, dtype=float)
            object.__setattr__(self, "e_perp", ep[:, None] if ep.ndim == 1 else ep)

    @property
    def grid(self) -> np.ndarray:
        return self.step * np.arange(self.v.shape[0])

    def frame_norm(self) -> np.ndarray:
        return self.e_par**2 + np.sum(self.e_perp**2, axis=1)


# --- spatial operators -------------------------------------------------------


class SpatialOperator:
    """Provides ``[v, D v, D^2 v, ...]`` for the configured discretization."""

    def __init__(self, config: SolverConfig):
        self.config = config
        n, h = config.node_count, config.step
        self.n = n
        self.h = h
        k = 2 * np.pi * np.fft.rfftfreq(n, d=h)
        self.ik = 1j * k
        cutoff = (2.0 / 3.0) * np.max(k)
        self.filt = (k <= cutoff + 1e-12).astype(float)
        if n % 2 == 0:
            self.ik_odd = self.ik.copy()
            self.ik_odd[-1] = 0.0  # Nyquist mode of odd derivatives is dropped
        else:
            self.ik_odd = self.ik
        self.fractional = not config.order.is_integer
        if self.fractional:
            self.frac_int = fractional_integral_matrix(1.0 - config.order.alpha, n, h)
            l = h * np.arange(n)
            width = config.sponge_fraction * config.domain_length
            dist = np.minimum(l, config.domain_length - l)
            ramp = np.clip(1.0 - dist / width, 0.0, 1.0)
            self.sponge = config.sponge_strength * ramp**2
        else:
            self.sponge = None

    def _spectral_first(self, f: np.ndarray) -> np.ndarray:
        mult = self.ik_odd * self.filt
        return np.fft.irfft(mult[:, None] * np.fft.rfft(f, axis=0), n=self.n, axis=0)

    def _fd_first(self, f: np.ndarray) -> np.ndarray:
        h = self.h
        return (
            -np.roll(f, -2, axis=0) + 8 * np.roll(f, -1, axis=0) - 8 * np.roll(f, 1, axis=0) + np.roll(f, 2, axis=0)
        ) / (12 * h)

    def first(self, f: np.ndarray) -> np.ndarray:
        if self.fractional:
            return self.frac_int @ self._spectral_first(f)
        if self.config.spatial == "fd":
            return self._fd_first(f)
        return self._spectral_first(f)

    def derivatives(self, v: np.ndarray, top: int, needed=None) -> list[np.ndarray]:
        """``[v, Dv, ..., D^top v]``; in spectral mode orders outside ``needed`` are skipped (None)."""
        if self.fractional or self.config.spatial == "fd":
            out = [v]
            for _ in range(top):
                out.append(self.first(out[-1]))
            return out
        vh = np.fft.rfft(v, axis=0)
        out = [v]
        for j in range(1, top + 1):
            if needed is not None and j not in needed:
                out.append(None)
                continue
            mult = (self.ik_odd if j % 2 else self.ik) ** j * self.filt
            out.append(np.fft.irfft(mult[:, None] * vh, n=self.n, axis=0))
        return out

    def smooth(self, r: np.ndarray) -> np.ndarray:
        """Dealias a nonlinear right-hand side (spectral mode only)."""
        if self.fractional or self.config.spatial == "fd":
            return r
        return np.fft.irfft(self.filt[:, None] * np.fft.rfft(r, axis=0), n=self.n, axis=0)

    def integrate(self, density: np.ndarray) -> float:
        """Periodic rectangle rule (spectrally accurate) or trapezoid on ``[0, L)``."""
        if self.config.periodic:
            return float(self.h * np.sum(density))
        return float(np.trapezoid(density, dx=self.h))


# --- right-hand sides -----------------------------------------------------------


def _hierarchy(levels: int):
    return generate_hierarchy(max(levels, 0))


def flow_polynomials(config: SolverConfig):
    """``(leading, shifted)`` flow polynomials with ``v_tau = leading - c * shifted``."""
    k = config.flow_level
    if k < 0:
        raise FlowConfigError("level -1 has no polynomial right-hand side")
    return flow_polynomials_for_level(k)


@lru_cache(maxsize=8)
def _compiled_flow(level: int):
    lead, shifted = flow_polynomials_for_level(level)
    return CompiledPolynomial(lead), (CompiledPolynomial(shifted) if shifted is not None else None)


@lru_cache(maxsize=8)
def _compiled_hamiltonians(top: int):
    return [CompiledPolynomial(lv.hamiltonian) for lv in _hierarchy(top)]


def flow_polynomials_for_level(k: int):
    levels = _hierarchy(k)
    if k == 0:
        return levels[0].flow, None
    return levels[k].flow, levels[k - 1].flow


def rhs_flow(state: FlowState, config: SolverConfig, op: SpatialOperator | None = None) -> np.ndarray:
    """Time derivative of ``v`` for levels 0, 1, 2 (and -1, delegated)."""
    if config.flow_level == -1:
        e_par, e_perp = reconstruct_frame(state.v, config)
        return -config.curvature_const * e_perp
    op = op or SpatialOperator(config)
    lead, shifted = _compiled_flow(config.flow_level)
    needed = lead.orders | (shifted.orders if shifted is not None else frozenset())
    derivs = op.derivatives(state.v, config.derivative_order, needed)
    r = lead(derivs)
    if shifted is not None and config.curvature_const != 0:
        r = r - config.curvature_const * shifted(derivs)
    r = op.smooth(r)
    if op.sponge is not None:
        r = r - op.sponge[:, None] * state.v
    return r


def _check_finite(arr: np.ndarray, tau: float) -> None:
    if not np.all(np.isfinite(arr)):
        raise FlowNumericError(f"non-finite values at tau={tau:.6g}")
    if np.max(np.abs(arr)) > 1e12:
        raise FlowNumericError(f"overflow (|v| > 1e12) at tau={tau:.6g}")


def _rk4(f: Callable[[np.ndarray], np.ndarray], v: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(v)
    k2 = f(v + 0.5 * dt * k1)
    k3 = f(v + 0.5 * dt * k2)
    k4 = f(v + dt * k3)
    return v + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def step(state: FlowState, config: SolverConfig, op: SpatialOperator | None = None, dt: float | None = None) -> FlowState:
    """One classical fourth-order Runge-Kutta step of a level 0, 1 or 2 flow."""
    if config.flow_level == -1:
        return step_minus1(state, config, dt=dt)
    op = op or SpatialOperator(config)
    dt = config.dt if dt is None else dt

    def f(v):
        return rhs_flow(FlowState(state.tau, state.step, v), config, op)

    v = _rk4(f, state.v, dt)
    _check_finite(v, state.tau + dt)
    return FlowState(state.tau + dt, state.step, v)


# --- the -1 flow -------------------------------------------------------------


def _cell_integrals(v: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order integrals of ``v`` over each cell ``[l_j, l_j+1]``."""
    n = v.shape[0]
    out = np.empty((n - 1, v.shape[1]))
    if n < 4:
        return 0.5 * h * (v[:-1] + v[1:])
    out[1:-1] = h * (-v[:-3] + 13 * v[1:-2] + 13 * v[2:-1] - v[3:]) / 24.0
    out[0] = h * (9 * v[0] + 19 * v[1] - 5 * v[2] + v[3]) / 24.0
    out[-1] = h * (9 * v[-1] + 19 * v[-2] - 5 * v[-3] + v[-4]) / 24.0
    return out


def frame_increments(v: np.ndarray, config: SolverConfig) -> np.ndarray:
    """Rotation generator of each cell: the integral of ``v`` (fractional in ``alpha < 1``)."""
    h = config.step
    if config.order.is_integer:
        return _cell_integrals(v, h)
    acc = fractional_integral_matrix(config.order.alpha, v.shape[0], h) @ v
    return np.diff(acc, axis=0)


def reconstruct_frame(v: np.ndarray, config: SolverConfig) -> tuple[np.ndarray, np.ndarray]:
    """Solve the frame constraints along ``l`` by per-cell plane rotations.

    Over a cell the generator ``[[0, -w^T], [w, 0]]`` with ``w`` the cell
    integral of ``v`` is exponentiated in closed form: a rotation by ``|w|`` in
    the plane of ``(1, 0)`` and ``(0, w/|w|)``.  The norm of the frame is
    preserved to rounding; in the scalar case the result is exact up to the
    cell quadrature.
    """
    w = frame_increments(v, config)
    n, c = v.shape
    if c == 1:
        phi = np.concatenate([[0.0], np.cumsum(w[:, 0])])
        return np.cos(phi), np.sin(phi)[:, None]
    e_par = np.empty(n)
    e_perp = np.empty((n, c))
    a, b = 1.0, np.zeros(c)
    e_par[0], e_perp[0] = a, b
    theta = np.linalg.norm(w, axis=1)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    safe = np.where(theta > 0, theta, 1.0)
    units = w / safe[:, None]
    for j in range(n - 1):
        if theta[j] == 0.0:
            e_par[j + 1], e_perp[j + 1] = a, b
            continue
        u = units[j]
        bu = float(b @ u)
        # rotate the (a, bu) pair; the part of b orthogonal to u is untouched
        na = cos_t[j] * a - sin_t[j] * bu
        nbu = sin_t[j] * a + cos_t[j] * bu
        b = b + (nbu - bu) * u
        a = na
        e_par[j + 1], e_perp[j + 1] = a, b
    return e_par, e_perp


def minus1_state(v: np.ndarray, tau: float, config: SolverConfig) -> FlowState:
    e_par, e_perp = reconstruct_frame(np.asarray(v, dtype=float).reshape(v.shape[0], -1), config)
    return FlowState(tau, config.step, v, e_par, e_perp)


def step_minus1(state: FlowState, config: SolverConfig, dt: float | None = None) -> FlowState:
    """Advance ``v_tau = -c e_perp`` by RK4, rebuilding the frame at every stage.

    After the step the frame is rebuilt from the new ``v``, its deviation from
    unit norm is checked against ``drift_tol`` and then projected away.
    """
    dt = config.dt if dt is None else dt
    c = config.curvature_const

    def f(v):
        return -c * reconstruct_frame(v, config)[1]

    v = _rk4(f, state.v, dt)
    _check_finite(v, state.tau + dt)
    e_par, e_perp = reconstruct_frame(v, config)
    drift = unit_norm_drift(e_par, e_perp)
    if drift > config.drift_tol:
        raise FlowNumericError(f"frame norm drift {drift:.3g} exceeds {config.drift_tol:g}")
    norm = np.sqrt(e_par**2 + np.sum(e_perp**2, axis=1))
    return FlowState(state.tau + dt, state.step, v, e_par / norm, e_perp / norm[:, None])


def unit_norm_drift(e_par: np.ndarray, e_perp: np.ndarray) -> float:
    """Largest deviation of ``e_par^2 + |e_perp|^2`` from 1 (before any projection)."""
    return float(np.max(np.abs(e_par**2 + np.sum(e_perp**2, axis=1) - 1.0)))


def frame_drift(state: FlowState) -> float:
    return float(np.max(np.abs(state.frame_norm() - 1.0)))


# --- diagnostics -------------------------------------------------------------------


@dataclass(frozen=True)
class ConservedTrace:
    tau: float
    values: dict[int, float]


def monitor(state: FlowState, config: SolverConfig, op: SpatialOperator | None = None) -> ConservedTrace:
    """Integrals of the monitored Hamiltonian densities over the grid."""
    if not config.monitor_set:
        return ConservedTrace(state.tau, {})
    op = op or SpatialOperator(config)
    dens = _compiled_hamiltonians(max(config.monitor_set))
    top = max(dens[k].max_order for k in config.monitor_set)
    derivs = op.derivatives(state.v, max(top, 0))
    vals = {}
    for k in config.monitor_set:
        vals[k] = op.integrate(dens[k](derivs))
        if not math.isfinite(vals[k]):
            raise FlowNumericError(f"non-finite conserved quantity H{k}")
    return ConservedTrace(state.tau, vals)


SINGULAR_TOL = 1e-2


def _l_derivative(f: np.ndarray, config: SolverConfig) -> np.ndarray:
    """Arclength derivative on ``[0, L)``: fourth-order central differences for
    ``alpha = 1`` (second-order one-sided at the two ends), L1 Caputo otherwise."""
    if not config.order.is_integer:
        return caputo_axis(config.order, f, config.step, axis=0)
    h = config.step
    out = np.gradient(f, h, axis=0, edge_order=2)
    out[2:-2] = (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * h)
    return out


def sg_residual(prev: FlowState, curr: FlowState, config: SolverConfig) -> tuple[np.ndarray, np.ndarray]:
    """Residual of ``(D e_perp / e_par)_tau + c e_perp`` between two adjacent frames.

    ``1/e_par`` is the signed form of ``(1 - |e_perp|^2)^(-1/2)``, which keeps the
    expression valid where the frame has turned past a right angle.  The time
    derivative is a difference quotient centered between the two frames.
    Returns ``(residual, singular)`` with ``singular`` flagging nodes where
    ``|e_par| < 1e-2`` (residual set to NaN there).
    """
    dt = curr.tau - prev.tau
    if dt <= 0:
        raise ValueError("frames must be in increasing tau order")
    singular = (np.abs(prev.e_par) < SINGULAR_TOL) | (np.abs(curr.e_par) < SINGULAR_TOL)
    with np.errstate(divide="ignore", invalid="ignore"):
        f0 = _l_derivative(prev.e_perp, config) / prev.e_par[:, None]
        f1 = _l_derivative(curr.e_perp, config) / curr.e_par[:, None]
    res = (f1 - f0) / dt + 0.5 * config.curvature_const * (prev.e_perp + curr.e_perp)
    res[singular] = np.nan
    return res, singular


# --- initial data --------------------------------------------------------------


def _unit_direction(direction: Sequence[float] | None, c: int) -> np.ndarray:
    if direction is None:
        d = np.zeros(c)
        d[0] = 1.0
        return d
    d = np.asarray(direction, dtype=float).reshape(-1)
    if d.size != c or not np.linalg.norm(d) > 0:
        raise FlowConfigError(f"direction must be a nonzero vector with {c} components")
    return d / np.linalg.norm(d)


def soliton_profile(l: np.ndarray, k: float = 1.0, center: float = 0.0, tau: float = 0.0) -> np.ndarray:
    """Scalar mKdV soliton ``2k sech(k(l - center) + k^3 tau)``."""
    return 2 * k / np.cosh(k * (l - center) + k**3 * tau)


def kink_angle(l: np.ndarray, center: float = 0.0, tau: float = 0.0) -> np.ndarray:
    """Sine-Gordon kink angle ``4 arctan(exp(l - center - tau))``."""
    return 4.0 * np.arctan(np.exp(l - center - tau))


def initial_profile(name: str, config: SolverConfig, **params) -> np.ndarray:
    """Samples of a named profile on ``l_j = j h``: ``soliton``, ``kink``, ``gaussian``, ``zero``."""
    n, c = config.node_count, config.component_count
    l = config.step * np.arange(n)
    center = params.get("center", 0.5 * config.domain_length)
    d = _unit_direction(params.get("direction"), c)
    if name == "soliton":
        prof = soliton_profile(l, params.get("k", 1.0), center)
    elif name == "kink":
        prof = 2.0 / np.cosh(l - center)
    elif name == "gaussian":
        prof = params.get("amplitude", 1.0) * np.exp(-(((l - center) / params.get("width", 1.0)) ** 2))
    elif name == "zero":
        prof = np.zeros(n)
    else:
        raise FlowConfigError(f"unknown profile {name!r}")
    return prof[:, None] * d[None, :]


def initial_state(v: np.ndarray, config: SolverConfig) -> FlowState:
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if v.shape != (config.node_count, config.component_count):
        raise FlowConfigError(f"initial data shape {v.shape} != {(config.node_count, config.component_count)}")
    if config.flow_level == -1:
        return minus1_state(v, 0.0, config)
    return FlowState(0.0, config.step, v)


def load_profile_table(path, config: SolverConfig) -> np.ndarray:
    """Read a CSV table with header ``node,v1,..,vC`` and one row per node."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise FlowConfigError("profile table is empty")
    header, body = rows[0], rows[1:]
    if header[0].strip() != "node":
        raise FlowConfigError("profile table header must start with 'node'")
    data = np.array([[float(x) for x in r] for r in body])
    if data.shape[1] != 1 + config.component_count:
        raise FlowConfigError("profile table column count does not match component_count")
    if not np.array_equal(data[:, 0], np.arange(config.node_count)):
        raise FlowConfigError("profile table must list nodes 0..node_count-1 in order")
    return data[:, 1:]


# --- driver ---------------------------------------------------------------


@dataclass
class FlowResult:
    config: SolverConfig
    frames: list[FlowState]
    trace: list[ConservedTrace]
    max_frame_drift: float = 0.0
    sg_residual_max: float | None = None


def run_flow(config: SolverConfig, v0: np.ndarray, progress: Callable[[int, int], None] | None = None) -> FlowResult:
    """Integrate from ``tau = 0`` to ``t_end`` in ``ceil(t_end/dt)`` equal steps."""
    state = initial_state(v0, config)
    nsteps = config.step_count
    dt = config.t_end / nsteps if nsteps else config.dt
    op = SpatialOperator(config)
    frames = [state]
    trace = [monitor(state, config, op)]
    drift = frame_drift(state) if config.flow_level == -1 else 0.0
    sg_max = None
    for i in range(1, nsteps + 1):
        prev = state
        if config.flow_level == -1:
            state = step_minus1(state, config, dt=dt)
            res, _ = sg_residual(prev, state, config)
            finite = res[np.isfinite(res)]
            if finite.size:
                sg_max = max(sg_max or 0.0, float(np.max(np.abs(finite))))
        else:
            state = step(state, config, op, dt=dt)
        if (config.output_every and i % config.output_every == 0) or i == nsteps:
            frames.append(state)
            trace.append(monitor(state, config, op))
        if progress:
            progress(i, nsteps)
    return FlowResult(config, frames, trace, drift, sg_max)


def write_frames_csv(path, frames: Sequence[FlowState]) -> None:
    frames = list(frames)
    c = frames[0].v.shape[1]
    has_frame = frames[0].e_par is not None
    header = ["tau", "node", "l"] + [f"v{i + 1}" for i in range(c)]
    if has_frame:
        header += ["e_par"] + [f"e_perp{i + 1}" for i in range(c)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for st in frames:
            l = st.grid
            for j in range(st.v.shape[0]):
                row = [repr(float(st.tau)), j, repr(float(l[j]))] + [repr(float(x)) for x in st.v[j]]
                if has_frame:
                    row += [repr(float(st.e_par[j]))] + [repr(float(x)) for x in st.e_perp[j]]
                w.writerow(row)


def trace_to_json(trace: Sequence[ConservedTrace]) -> list[dict]:
    return [{"tau": t.tau, **{f"H{k}": val for k, val in sorted(t.values.items())}} for t in trace]


def relative_drift(trace: Sequence[ConservedTrace], k: int) -> float:
    start = trace[0].values[k]
    scale = abs(start) if start != 0 else 1.0
    return max(abs(t.values[k] - start) for t in trace) / scale


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
