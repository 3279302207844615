"""Printed-formula fidelity suite: a deterministic pass/fail table.

Each check has a label, a group (``hierarchy``, ``geometry`` or ``klein``), a
status and a one-line detail.  ``NOTE`` rows record known misprints whose
corrected reading is what the ``PASS`` rows check; they never fail the run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import diffpoly as dp
from . import geometry as geo
from . import klein
from .diffpoly import reference as ref
from .golden import GOLDEN_LEVELS, compare_level

KINDS = ("all", "hierarchy", "geometry", "klein")
PASS, FAIL, NOTE = "PASS", "FAIL", "NOTE"


@dataclass(frozen=True)
class CheckResult:
    label: str
    group: str
    status: str
    detail: str
    excerpt: str = ""


@dataclass(frozen=True)
class Report:
    results: list[CheckResult]

    @property
    def ok(self) -> bool:
        return all(r.status != FAIL for r in self.results)

    def render(self) -> str:
        width = max((len(r.label) for r in self.results), default=5)
        lines = []
        for r in self.results:
            lines.append(f"{r.status:<4}  {r.label:<{width}}  {r.detail}")
            lines.extend("      | " + x for x in r.excerpt.splitlines())
        n_fail = sum(r.status == FAIL for r in self.results)
        lines.append(f"{len(self.results)} checks, {n_fail} failed")
        return "\n".join(lines) + "\n"


def _eq(label, group, got, want, detail) -> CheckResult:
    ok = got == want
    excerpt = "" if ok else f"expected: {dp.to_text(want)}\ngenerated: {dp.to_text(got)}"
    return CheckResult(label, group, PASS if ok else FAIL, detail, excerpt)


# --- hierarchy -----------------------------------------------------------


def _hierarchy_checks(golden_dir) -> list[CheckResult]:
    out = []
    e1, e2 = dp.op_R(dp.v(1)), dp.op_R(dp.op_R(dp.v(1)))
    for label, sector in (("mkdv1a", "h"), ("mkdv2a", "v")):
        s = dp.SECTOR_SYMBOLS[sector]
        levels = dp.generate_hierarchy(2, sector)
        # printed text under the sector's symbol, parsed back and compared structurally
        first = dp.from_text(dp.to_text(ref.first_flow(), s), "vector", s)
        second = dp.from_text(dp.to_text(ref.second_flow_corrected(), s), "vector", s)
        out.append(_eq(f"{label}:R({s}1)", "hierarchy", e1, first, f"R({s}1) = {dp.to_text(first, s)}"))
        out.append(_eq(f"{label}:R^2({s}1)", "hierarchy", e2, second, f"R^2({s}1) = corrected second flow"))
        out.append(_eq(f"{label}:chain", "hierarchy", levels[2].flow, second, f"R^2({s}1) equals hierarchy level 2"))
        out.append(
            CheckResult(
                f"{label}:printed-R^2",
                "hierarchy",
                NOTE,
                f"literal printed second flow differs from R^2({s}1) by "
                f"{dp.to_text(ref.second_flow_literal() - e2, s)}",
            )
        )
    hams = ref.hamiltonians_printed()
    for label, sector in (("hhh", "h"), ("hhv", "v")):
        levels = dp.generate_hierarchy(2, sector)
        for lvl, h in zip(levels, hams):
            out.append(_eq(f"{label}:H{lvl.k}", "hierarchy", lvl.hamiltonian, h, "Hamiltonian equals printed form"))
            ok = dp.euler_operator(h) == lvl.covector and dp.op_H(lvl.covector) == lvl.flow
            out.append(
                CheckResult(
                    f"{label}:chain{lvl.k}",
                    "hierarchy",
                    PASS if ok else FAIL,
                    "E(H) = covector and H(covector) = flow",
                )
            )
        lit = ref.second_hamiltonian_literal()
        out.append(
            CheckResult(
                f"{label}:printed-H2",
                "hierarchy",
                NOTE,
                f"literal linear <v,v1> reading has scaling weight {dp.scaling_weight(lit)}; squared term used",
            )
        )
    for sector in ("h", "v"):
        for lvl in dp.generate_hierarchy(GOLDEN_LEVELS, sector):
            cmp = compare_level(lvl, golden_dir)
            out.append(
                CheckResult(
                    f"golden:{sector}{lvl.k}",
                    "hierarchy",
                    PASS if cmp.ok else FAIL,
                    f"{cmp.path.name} matches generated text" if cmp.ok else f"{cmp.path.name} mismatch",
                    cmp.excerpt,
                )
            )
    return out


# --- geometry -----------------------------------------------------------------


def _geometry_checks() -> list[CheckResult]:
    out = []
    tol = 1e-8
    for name in ("sphere", "twisted"):
        chart, N, g = geo.FIXTURES[name]()
        conn = geo.canonical_dconnection(chart, N, g)
        T = geo.torsion(chart, N, conn)
        mask = geo.validity_mask(chart)
        n = chart.n
        th = float(np.max(np.abs(T[:n, :n, :n][..., mask])))
        tv = float(np.max(np.abs(T[n:, n:, n:][..., mask])))
        for lab, val in (("T^i_jk", th), ("T^a_bc", tv)):
            out.append(
                CheckResult(
                    f"footnote:{lab}:{name}",
                    "geometry",
                    PASS if val <= tol else FAIL,
                    f"max |{lab}| = {val:.2e} (tol {tol:g})",
                )
            )
        comp = float(np.max(np.abs(geo.metric_compatibility(chart, N, g, conn)[..., mask])))
        out.append(
            CheckResult(
                f"footnote:metric-compatible:{name}",
                "geometry",
                PASS if comp <= tol else FAIL,
                f"max |D g| = {comp:.2e}",
            )
        )
    chart, N, g = geo.sphere_fixture()
    b = geo.curvature_bundle(chart, N, g)
    hr = b.h_scalar[b.mask]
    dev = float(np.max(np.abs(hr - 2.0)))
    out.append(
        CheckResult("sphere:hR", "geometry", PASS if dev <= 0.05 else FAIL, f"max |hR - 2| = {dev:.3e} (tol 0.05)")
    )
    chart, N, g = geo.flat_fixture()
    b = geo.curvature_bundle(chart, N, g)
    worst = max(float(np.max(np.abs(a))) for a in (b.torsion, b.curvature, b.einstein))
    out.append(CheckResult("flat:zero", "geometry", PASS if worst <= tol else FAIL, f"max |T|,|R|,|G| = {worst:.2e}"))
    return out


# --- klein --------------------------------------------------------------------------


def _klein_checks(seed: int, samples: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    tol = 1e-12
    for label, sector in (("aux41", "h"), ("aux41a", "v")):
        worst: dict[str, float] = {}
        dot_err = 0.0
        for n in range(2, 6):
            for _ in range(samples):
                v = rng.standard_normal(n - 1)
                e_perp = rng.standard_normal(n - 1)
                e_par = float(rng.standard_normal())
                varpi = rng.standard_normal(n - 1)
                theta = klein.random_skew(rng, n - 1)
                for key, r in klein.bracket_identities(v, e_par, e_perp, varpi, theta).items():
                    worst[key] = max(worst.get(key, 0.0), r)
                p, q = rng.standard_normal(n), rng.standard_normal(n)
                ck = klein.ck_inner(klein.embed_p(klein.HVector.of(p)), klein.embed_p(klein.HVector.of(q)))
                dot_err = max(dot_err, abs(ck - float(p @ q)))
        for key in sorted(worst):
            out.append(
                CheckResult(
                    f"{label}:{key}", "klein", PASS if worst[key] <= tol else FAIL, f"max residual {worst[key]:.1e}"
                )
            )
        out.append(
            CheckResult(
                f"{label}:ck-dot", "klein", PASS if dot_err <= tol else FAIL, f"CK product vs dot {dot_err:.1e}"
            )
        )
        r = klein.printed_normal_flow_residual(
            rng.standard_normal(2), klein.random_skew(rng, 2), 0.6, rng.standard_normal(2)
        )
        out.append(
            CheckResult(
                f"{label}:printed-[Gamma_Y,e_Y]",
                "klein",
                NOTE,
                f"literal reading residual {r:.2f}; the identity holds with e_X ({sector}-sector)",
            )
        )
    return out


def verify_paper(kind: str = "all", golden_dir=None, seed: int = 0, samples: int = 25) -> Report:
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    groups: list[tuple[str, Callable[[], list[CheckResult]]]] = [
        ("hierarchy", lambda: _hierarchy_checks(golden_dir)),
        ("geometry", _geometry_checks),
        ("klein", lambda: _klein_checks(seed, samples)),
    ]
    results = []
    for name, fn in groups:
        if kind in ("all", name):
            results.extend(fn())
    return Report(results)
