"""``fracflow`` command line.

``run`` executes a scenario file.  ``hierarchy``, ``flow`` and ``geometry``
build an in-memory scenario from their flags and run the same pipeline, so
every subcommand writes the same manifest.  ``verify`` prints the fidelity
table and exits nonzero on any failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .scenario import (
    EXIT_OK,
    ScenarioError,
    config_from_dict,
    output_dir,
    run_config,
    run_scenario,
)
from .verify import KINDS, verify_paper


def _emit_error(exc: ScenarioError) -> int:
    print(json.dumps(exc.as_dict(), sort_keys=True), file=sys.stderr)
    return exc.code


def _run_dict(data: dict, quiet: bool = False) -> int:
    try:
        cfg = config_from_dict(data, Path.cwd())
        manifest = run_config(cfg)
    except ScenarioError as exc:
        return _emit_error(exc)
    if not quiet:
        print(f"wrote {', '.join(manifest['outputs'] + [cfg.outputs.manifest])} to {output_dir(cfg)}")
    return EXIT_OK


def _outputs(args) -> dict:
    return {"directory": args.output_dir} if args.output_dir else {}


def cmd_run(args) -> int:
    return run_scenario(args.scenario)


def cmd_verify(args) -> int:
    report = verify_paper(args.kind, golden_dir=args.golden_dir, seed=args.seed)
    sys.stdout.write(report.render())
    return 0 if report.ok else 1


def cmd_hierarchy(args) -> int:
    data = {
        "kind": "hierarchy",
        "dimensions": {"component_count": args.components},
        "hierarchy": {"levels": args.levels, "sectors": ["h", "v"] if args.sector == "both" else [args.sector]},
        "outputs": _outputs(args),
    }
    code = _run_dict(data, quiet=True)
    if code == EXIT_OK and not args.quiet:
        out = output_dir(config_from_dict(data, Path.cwd()))
        for p in sorted(out.glob("hierarchy_*_k*.txt")):
            sys.stdout.write(p.read_text())
        if args.components == 1:
            manifest = json.loads((out / "manifest.json").read_text())
            for sector, sec in manifest["results"].items():
                for k, text in sec.get("scalar_flows", {}).items():
                    print(f"# scalar reduction, sector {sector}, level {k}: {text}")
    return code


def cmd_flow(args) -> int:
    profile = {"name": args.profile, "k": args.k}
    if args.profile_file:
        profile = {"file": args.profile_file}
    flow = {
        "level": args.level,
        "curvature_const": args.curvature,
        "node_count": args.nodes,
        "domain_length": args.length,
        "t_end": args.t_end,
        "spatial": args.spatial,
        "cfl_const": args.cfl,
        "output_every": args.output_every,
        "profile": profile,
    }
    if args.dt is not None:
        flow["dt"] = args.dt
    else:
        q = {-1: 0, 0: 1, 1: 3, 2: 5}[args.level]
        h = args.length / args.nodes
        flow["dt"] = min(1e-2, args.cfl * h**q) if q else 1e-3
    return _run_dict(
        {
            "kind": "flow",
            "alpha": args.alpha,
            "dimensions": {"component_count": args.components},
            "flow": flow,
            "outputs": _outputs(args),
        }
    )


def cmd_geometry(args) -> int:
    known = {"flat", "sphere", "twisted", "random"}
    geom = {"fixture": args.fixture} if args.fixture in known else {"fixture": "file", "file": args.fixture}
    return _run_dict(
        {"kind": "geometry", "alpha": args.alpha, "seed": args.seed, "geometry": geom, "outputs": _outputs(args)}
    )


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracflow", description="Fractional curve-flow toolkit.")
    ap.add_argument("--version", action="version", version=f"fracflow {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a YAML scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="printed-formula fidelity table")
    p.add_argument("kind", nargs="?", default="all", choices=KINDS)
    p.add_argument("--golden-dir", default=None, help="directory of golden hierarchy files")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("hierarchy", help="generate hierarchy levels 0..K")
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--components", type=int, default=1)
    p.add_argument("--sector", choices=["h", "v", "both"], default="both")
    p.add_argument("--output-dir", default=None)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_hierarchy)

    p = sub.add_parser("flow", help="integrate one hierarchy flow")
    p.add_argument("--profile", default="soliton", choices=["soliton", "kink", "gaussian", "zero"])
    p.add_argument("--profile-file", default=None, help="table of node, v1..vC rows")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--level", type=int, default=1, choices=[-1, 0, 1, 2])
    p.add_argument("--k", type=float, default=1.0, help="soliton parameter")
    p.add_argument("--curvature", type=float, default=0.0, help="curvature constant c")
    p.add_argument("--nodes", type=int, default=256)
    p.add_argument("--length", type=float, default=16 * math.pi)
    p.add_argument("--dt", type=float, default=None, help="default: the stability limit")
    p.add_argument("--t-end", type=float, default=0.1)
    p.add_argument("--spatial", choices=["spectral", "fd"], default="spectral")
    p.add_argument("--cfl", type=float, default=0.1)
    p.add_argument("--components", type=int, default=1)
    p.add_argument("--output-every", type=int, default=0)
    p.add_argument("--output-dir", default=None)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("geometry", help="curvature report for a fixture")
    p.add_argument("--fixture", default="flat", help="flat, sphere, twisted, random or a table file")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir", default=None)
    p.set_defaults(func=cmd_geometry)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
