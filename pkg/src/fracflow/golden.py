"""Golden text files of hierarchy levels and text-diff comparison against them.

One file per sector and level, ``hierarchy_<sector>_k<k>.txt``::

    # <free comment lines>
    flow = <canonical text>
    covector = <canonical text>
    hamiltonian = <canonical text>
"""

from __future__ import annotations

import difflib
import os
from dataclasses import dataclass
from pathlib import Path

from .diffpoly import HierarchyLevel, generate_hierarchy

GOLDEN_LEVELS = 4
GOLDEN_ENV = "FRACFLOW_GOLDEN_DIR"
KEYS = ("flow", "covector", "hamiltonian")


def default_golden_dir() -> Path:
    env = os.environ.get(GOLDEN_ENV)
    return Path(env) if env else Path(__file__).with_name("golden")


def golden_name(sector: str, k: int) -> str:
    return f"hierarchy_{sector}_k{k}.txt"


def render_level(level: HierarchyLevel) -> str:
    text = level.as_text()
    lines = [f"# level {level.k}, sector {level.sector} (symbol {level.symbol})"]
    lines += [f"{key} = {text[key]}" for key in KEYS]
    return "\n".join(lines) + "\n"


def parse_golden(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ValueError(f"malformed golden line {raw!r}")
        out[key.strip()] = val.strip()
    return out


def write_golden(directory, levels: int = GOLDEN_LEVELS) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for sector in ("h", "v"):
        for lvl in generate_hierarchy(levels, sector):
            p = directory / golden_name(sector, lvl.k)
            p.write_text(render_level(lvl))
            paths.append(p)
    return paths


@dataclass(frozen=True)
class GoldenComparison:
    path: Path
    ok: bool
    excerpt: str  # unified diff lines, empty when ok


def compare_level(level: HierarchyLevel, directory=None, context: int = 0, max_lines: int = 12) -> GoldenComparison:
    """Compare the generated level with its golden file, key by key."""
    path = Path(directory or default_golden_dir()) / golden_name(level.sector, level.k)
    try:
        stored = parse_golden(path.read_text())
    except (OSError, ValueError) as exc:
        return GoldenComparison(path, False, f"cannot read golden file: {exc}")
    fresh = level.as_text()
    want = [f"{k} = {stored.get(k, '<missing>')}" for k in KEYS]
    got = [f"{k} = {fresh[k]}" for k in KEYS]
    if want == got:
        return GoldenComparison(path, True, "")
    diff = list(difflib.unified_diff(want, got, "golden", "generated", n=context, lineterm=""))
    if len(diff) > max_lines:
        diff = diff[:max_lines] + ["..."]
    return GoldenComparison(path, False, "\n".join(diff))
