"""Declarative scenario files: schema, loading, and the four pipelines.

A scenario is a YAML mapping with a fixed, versioned schema (see
``docs/formats/scenario.md``).  Unknown keys are errors, every block is
validated when the file is loaded (including the CFL guard of flow runs), and
a run writes its artifacts plus ``manifest.json`` into one directory.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
import sys
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from . import __version__
from . import diffpoly as dp
from . import flows
from . import geometry as geo
from .frac_core import FractionalOrder
from .golden import compare_level, golden_name, render_level

SCHEMA_VERSION = 1
OUTPUT_ENV = "FRACFLOW_OUTPUT_DIR"
KINDS = ("geometry", "hierarchy", "flow", "klein-check")

EXIT_OK, EXIT_SCHEMA, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class ScenarioError(Exception):
    """Failure with a process exit status and a category name."""

    categories = {EXIT_SCHEMA: "schema", EXIT_NUMERIC: "numeric", EXIT_IO: "io"}

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code
        self.message = message

    def as_dict(self) -> dict:
        return {"error": self.categories.get(self.code, "unknown"), "exit_status": self.code, "message": self.message}


# --- schema --------------------------------------------------------------------


@dataclass(frozen=True)
class Dimensions:
    n: int = 2
    m: int = 1
    component_count: int = 1


@dataclass(frozen=True)
class Outputs:
    directory: str = "out"
    frames: str = "frames.csv"
    manifest: str = "manifest.json"


@dataclass(frozen=True)
class HierarchyBlock:
    levels: int = 2
    sectors: list[str] = field(default_factory=lambda: ["h", "v"])
    order_cap: int = dp.DEFAULT_ORDER_CAP


@dataclass(frozen=True)
class ProfileBlock:
    name: str = "soliton"
    file: Optional[str] = None
    k: float = 1.0
    center: Optional[float] = None
    amplitude: float = 1.0
    width: float = 1.0
    direction: Optional[list[float]] = None


@dataclass(frozen=True)
class FlowBlock:
    level: int = 1
    curvature_const: float = 1.0
    dt: float = 1e-3
    t_end: float = 0.1
    node_count: int = 256
    domain_length: float = 2 * math.pi
    monitor: list[int] = field(default_factory=lambda: [0, 1])
    cfl_const: float = 0.1
    spatial: str = "spectral"
    sponge_strength: float = 10.0
    sponge_fraction: float = 0.05
    drift_tol: float = 1e-6
    output_every: int = 0
    profile: ProfileBlock = field(default_factory=ProfileBlock)


@dataclass(frozen=True)
class GeometryBlock:
    fixture: str = "flat"  # flat | sphere | twisted | random | file
    file: Optional[str] = None
    steps: Optional[list[float]] = None  # flat/random charts; one entry per axis or a single value
    counts: Optional[list[int]] = None
    twist: float = 0.5


@dataclass(frozen=True)
class KleinBlock:
    samples: int = 25
    dims: list[int] = field(default_factory=lambda: [2, 3, 4, 5])


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    schema_version: int = SCHEMA_VERSION
    alpha: float = 1.0
    seed: int = 0
    dimensions: Dimensions = field(default_factory=Dimensions)
    outputs: Outputs = field(default_factory=Outputs)
    hierarchy: HierarchyBlock = field(default_factory=HierarchyBlock)
    flow: FlowBlock = field(default_factory=FlowBlock)
    geometry: GeometryBlock = field(default_factory=GeometryBlock)
    klein: KleinBlock = field(default_factory=KleinBlock)
    base_dir: str = field(default=".", compare=False, metadata={"internal": True})

    def as_dict(self) -> dict:
        """Canonical content (what the config hash covers)."""
        d = dataclasses.asdict(self)
        d.pop("base_dir")
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _schema_fail(path: str, msg: str) -> ScenarioError:
    return ScenarioError(EXIT_SCHEMA, f"{path or '<root>'}: {msg}")


def _coerce(tp, value, path: str):
    origin = typing.get_origin(tp)
    if origin is typing.Union:  # Optional[X]
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        return None if value is None else _coerce(args[0], value, path)
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path)
    if origin is list:
        (item,) = typing.get_args(tp)
        if not isinstance(value, list):
            raise _schema_fail(path, f"expected a list, got {type(value).__name__}")
        return [_coerce(item, x, f"{path}[{i}]") for i, x in enumerate(value)]
    if tp is bool:
        if not isinstance(value, bool):
            raise _schema_fail(path, "expected true/false")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise _schema_fail(path, f"expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise _schema_fail(path, f"expected a number, got {value!r}")
        if not math.isfinite(value):
            raise _schema_fail(path, "must be finite")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise _schema_fail(path, f"expected a string, got {value!r}")
        return value
    raise TypeError(f"unsupported schema type {tp}")  # pragma: no cover


def _build(cls, data, path: str = ""):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise _schema_fail(path, f"expected a mapping, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    known = {f.name: f for f in dataclasses.fields(cls) if not f.metadata.get("internal")}
    unknown = sorted(set(map(str, data)) - set(known))
    if unknown:
        raise _schema_fail(path, f"unknown key(s): {', '.join(unknown)}")
    kwargs = {}
    for name, value in data.items():
        kwargs[name] = _coerce(hints[name], value, f"{path}.{name}" if path else name)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise _schema_fail(path, str(exc)) from None


# --- cross-field validation --------------------------------------------------------


def solver_config(cfg: ScenarioConfig) -> flows.SolverConfig:
    f = cfg.flow
    return flows.SolverConfig(
        order=FractionalOrder(cfg.alpha),
        flow_level=f.level,
        curvature_const=f.curvature_const,
        dt=f.dt,
        t_end=f.t_end,
        node_count=f.node_count,
        domain_length=f.domain_length,
        monitor_set=tuple(f.monitor),
        component_count=cfg.dimensions.component_count,
        cfl_const=f.cfl_const,
        spatial=f.spatial,
        sponge_strength=f.sponge_strength,
        sponge_fraction=f.sponge_fraction,
        drift_tol=f.drift_tol,
        output_every=f.output_every,
    )


def _resolve(cfg: ScenarioConfig, p: str) -> Path:
    q = Path(p)
    return q if q.is_absolute() else Path(cfg.base_dir) / q


def _axis_values(values, count: int, name: str):
    if values is None:
        return None
    if len(values) == 1:
        return list(values) * count
    if len(values) != count:
        raise _schema_fail(f"geometry.{name}", f"need 1 or {count} entries, got {len(values)}")
    return list(values)


def chart_for(cfg: ScenarioConfig) -> geo.ChartSpec | None:
    """Chart of flat/random fixtures built from the scenario (None for the others)."""
    g, d = cfg.geometry, cfg.dimensions
    if g.fixture not in ("flat", "random"):
        return None
    k = d.n + d.m
    steps = _axis_values(g.steps, k, "steps") or [0.1] * k
    counts = _axis_values(g.counts, k, "counts") or [9] * k
    return geo.ChartSpec(d.n, d.m, tuple(steps), tuple(counts), FractionalOrder(cfg.alpha))


def validate(cfg: ScenarioConfig) -> None:
    if cfg.schema_version != SCHEMA_VERSION:
        raise _schema_fail("schema_version", f"unsupported version {cfg.schema_version} (expected {SCHEMA_VERSION})")
    if cfg.kind not in KINDS:
        raise _schema_fail("kind", f"must be one of {', '.join(KINDS)}")
    try:
        FractionalOrder(cfg.alpha)
    except ValueError as exc:
        raise _schema_fail("alpha", str(exc)) from None
    d = cfg.dimensions
    if min(d.n, d.m, d.component_count) < 1:
        raise _schema_fail("dimensions", "n, m and component_count must be positive")
    if cfg.kind == "hierarchy":
        h = cfg.hierarchy
        if not h.sectors or any(s not in dp.SECTOR_SYMBOLS for s in h.sectors):
            raise _schema_fail("hierarchy.sectors", "entries must be 'h' or 'v'")
        if h.levels < 0 or 2 * h.levels + 1 > h.order_cap:
            raise _schema_fail("hierarchy.levels", f"need 0 <= levels and 2*levels+1 <= order_cap ({h.order_cap})")
    elif cfg.kind == "flow":
        try:
            sc = solver_config(cfg)
        except (flows.FlowConfigError, ValueError) as exc:
            raise _schema_fail("flow", str(exc)) from None
        p = cfg.flow.profile
        if p.file is None:
            try:
                flows.initial_profile(p.name, sc, **_profile_params(p))
            except flows.FlowConfigError as exc:
                raise _schema_fail("flow.profile", str(exc)) from None
    elif cfg.kind == "geometry":
        g = cfg.geometry
        if g.fixture not in ("flat", "sphere", "twisted", "random", "file"):
            raise _schema_fail("geometry.fixture", "must be flat, sphere, twisted, random or file")
        if (g.fixture == "file") != (g.file is not None):
            raise _schema_fail("geometry.file", "required exactly when fixture is 'file'")
        try:
            chart_for(cfg)
        except geo.GeometryError as exc:
            raise _schema_fail("geometry", str(exc)) from None
    elif cfg.kind == "klein-check":
        k = cfg.klein
        if k.samples < 1 or not k.dims or any(x < 2 for x in k.dims):
            raise _schema_fail("klein", "samples >= 1 and dims entries >= 2 required")


def config_from_dict(data: Any, base_dir: str | os.PathLike = ".") -> ScenarioConfig:
    if not isinstance(data, dict):
        raise _schema_fail("", "scenario must be a mapping")
    if "kind" not in data:
        raise _schema_fail("kind", "missing")
    cfg = _build(ScenarioConfig, data)
    cfg = dataclasses.replace(cfg, base_dir=str(base_dir))
    validate(cfg)
    return cfg


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(EXIT_IO, f"cannot read scenario: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(EXIT_SCHEMA, f"invalid YAML: {exc}") from None
    return config_from_dict(data, path.parent)


def output_dir(cfg: ScenarioConfig) -> Path:
    env = os.environ.get(OUTPUT_ENV)
    return Path(env) if env else _resolve(cfg, cfg.outputs.directory)


# --- pipelines ---------------------------------------------------------------------


def _profile_params(p: ProfileBlock) -> dict:
    out = {"k": p.k, "amplitude": p.amplitude, "width": p.width, "direction": p.direction}
    if p.center is not None:
        out["center"] = p.center
    return out


def _run_hierarchy(cfg: ScenarioConfig, out: Path) -> tuple[list[str], dict]:
    h = cfg.hierarchy
    files, results = [], {}
    for sector in h.sectors:
        levels = dp.generate_hierarchy(h.levels, sector, h.order_cap)
        matches = {}
        for lvl in levels:
            name = golden_name(sector, lvl.k)
            (out / name).write_text(render_level(lvl))
            files.append(name)
            if lvl.k <= 4:
                matches[str(lvl.k)] = compare_level(lvl).ok
        sec = {"golden_match": matches, "weights": {}}
        for lvl in levels:
            sec["weights"][str(lvl.k)] = [
                dp.scaling_weight(x) for x in (lvl.flow, lvl.covector, lvl.hamiltonian)
            ]
        if cfg.dimensions.component_count == 1:
            s = "u" if sector == "h" else "z"
            sec["scalar_flows"] = {str(lvl.k): dp.scalar_text(lvl.flow, s) for lvl in levels}
        results[sector] = sec
    return files, results


def _run_flow(cfg: ScenarioConfig, out: Path) -> tuple[list[str], dict]:
    sc = solver_config(cfg)
    p = cfg.flow.profile
    if p.file is not None:
        try:
            v0 = flows.load_profile_table(_resolve(cfg, p.file), sc)
        except flows.FlowConfigError as exc:
            raise ScenarioError(EXIT_IO, f"profile table: {exc}") from None
        except ValueError as exc:
            raise ScenarioError(EXIT_IO, f"profile table: {exc}") from None
    else:
        v0 = flows.initial_profile(p.name, sc, **_profile_params(p))
    res = flows.run_flow(sc, v0)
    flows.write_frames_csv(out / cfg.outputs.frames, res.frames)
    results: dict = {
        "steps": sc.step_count,
        "frames": len(res.frames),
        "conserved": flows.trace_to_json(res.trace),
        "relative_drift": {f"H{k}": flows.relative_drift(res.trace, k) for k in sc.monitor_set},
        "max_abs_v": float(np.max(np.abs(res.frames[-1].v))),
    }
    if sc.flow_level == -1:
        results["max_frame_drift"] = res.max_frame_drift
        results["sg_residual_max"] = res.sg_residual_max
    return [cfg.outputs.frames], results


def _geometry_fixture(cfg: ScenarioConfig):
    g = cfg.geometry
    alpha = cfg.alpha
    if g.fixture == "file":
        try:
            chart, N, gm = geo.load_fixture(_resolve(cfg, g.file))
        except (OSError, ValueError) as exc:
            raise ScenarioError(EXIT_IO, f"geometry table: {exc}") from None
        chart = dataclasses.replace(chart, order=FractionalOrder(alpha))
        return chart, N, gm
    if g.fixture == "sphere":
        return geo.sphere_fixture(alpha)
    if g.fixture == "twisted":
        return geo.twisted_fixture(alpha, g.twist)
    chart = chart_for(cfg)
    if g.fixture == "flat":
        shape = chart.shape
        eye = lambda k: np.broadcast_to(np.eye(k).reshape(k, k, *(1,) * len(shape)), (k, k, *shape)).copy()
        return chart, geo.NConnection.zero(chart), geo.DMetric(eye(chart.n), eye(chart.m))
    return geo.random_smooth_fixture(cfg.seed, chart=chart)


def _run_geometry(cfg: ScenarioConfig, out: Path) -> tuple[list[str], dict]:
    chart, N, g = _geometry_fixture(cfg)
    bundle = geo.curvature_bundle(chart, N, g)
    mask = bundle.mask
    comments = [f"alpha = {chart.order.alpha!r}", f"fixture = {cfg.geometry.fixture}"]
    geo.write_table(out / "curvature.txt", chart, geo.bundle_fields(chart, bundle), comments)
    geo.save_fixture(out / "fixture.txt", chart, N, g)
    n = chart.n

    def mx(a):
        vals = a[..., mask]
        return float(np.max(np.abs(vals))) if vals.size else 0.0

    results = {
        "n": chart.n,
        "m": chart.m,
        "valid_nodes": int(mask.sum()),
        "max_abs_torsion": mx(bundle.torsion),
        "max_abs_torsion_hh_h": mx(bundle.torsion[:n, :n, :n]),
        "max_abs_torsion_vv_v": mx(bundle.torsion[n:, n:, n:]),
        "max_abs_curvature": mx(bundle.curvature),
        "max_abs_einstein": mx(bundle.einstein),
        "h_scalar_range": [float(np.min(bundle.h_scalar[mask])), float(np.max(bundle.h_scalar[mask]))]
        if mask.any()
        else None,
        "scalar_range": [float(np.min(bundle.scalar[mask])), float(np.max(bundle.scalar[mask]))]
        if mask.any()
        else None,
    }
    return ["curvature.txt", "fixture.txt"], results


def _run_klein(cfg: ScenarioConfig, out: Path) -> tuple[list[str], dict]:
    from . import klein

    rng = np.random.default_rng(cfg.seed)
    worst: dict[str, float] = {}
    for n in cfg.klein.dims:
        for _ in range(cfg.klein.samples):
            r = klein.bracket_identities(
                rng.standard_normal(n - 1),
                float(rng.standard_normal()),
                rng.standard_normal(n - 1),
                rng.standard_normal(n - 1),
                klein.random_skew(rng, n - 1),
            )
            for key, val in r.items():
                worst[key] = max(worst.get(key, 0.0), val)
            p, q = rng.standard_normal(n), rng.standard_normal(n)
            ck = klein.ck_inner(klein.embed_p(klein.HVector.of(p)), klein.embed_p(klein.HVector.of(q)))
            worst["ck_dot"] = max(worst.get("ck_dot", 0.0), abs(ck - float(p @ q)))
    lines = [f"{k} {worst[k]:.3e}" for k in sorted(worst)]
    (out / "klein.txt").write_text("identity max_residual\n" + "\n".join(lines) + "\n")
    failed = sorted(k for k, val in worst.items() if val > 1e-12)
    if failed:
        raise ScenarioError(EXIT_NUMERIC, f"identities above 1e-12: {', '.join(failed)}")
    return ["klein.txt"], {"max_residual": worst}


_PIPELINES = {
    "hierarchy": _run_hierarchy,
    "flow": _run_flow,
    "geometry": _run_geometry,
    "klein-check": _run_klein,
}


def run_config(cfg: ScenarioConfig) -> dict:
    """Execute a validated scenario; returns the manifest (also written to disk)."""
    out = output_dir(cfg)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ScenarioError(EXIT_IO, f"cannot create output directory: {exc}") from None
    try:
        with np.errstate(over="raise", invalid="raise", divide="raise"):
            files, results = _PIPELINES[cfg.kind](cfg, out)
    except ScenarioError:
        raise
    except (flows.FlowNumericError, FloatingPointError, ArithmeticError, dp.NotExact) as exc:
        raise ScenarioError(EXIT_NUMERIC, f"{type(exc).__name__}: {exc}") from None
    except geo.GeometryError as exc:
        raise ScenarioError(EXIT_NUMERIC, f"GeometryError: {exc}") from None
    except OSError as exc:
        raise ScenarioError(EXIT_IO, str(exc)) from None
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "kind": cfg.kind,
        "library_version": __version__,
        "config_hash": cfg.config_hash(),
        "config": cfg.as_dict(),
        "outputs": files,
        "results": results,
    }
    try:
        flows.write_json(out / cfg.outputs.manifest, manifest)
    except OSError as exc:
        raise ScenarioError(EXIT_IO, str(exc)) from None
    return manifest


def run_scenario(path) -> int:
    """Load, run and report; returns the process exit status."""
    try:
        run_config(load_scenario(path))
    except ScenarioError as exc:
        print(json.dumps(exc.as_dict(), sort_keys=True), file=sys.stderr)
        return exc.code
    return EXIT_OK
