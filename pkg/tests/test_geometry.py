import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from fracflow import geometry as geo
from fracflow.frac_core import FractionalOrder
from fracflow.geometry import (
    ChartSpec,
    DMetric,
    GeometryError,
    NConnection,
    canonical_dconnection,
    curvature,
    curvature_bundle,
    levi_civita,
    metric_compatibility,
    n_adapted_derivative,
    ricci_scalar_einstein,
    sectional_curvature,
    torsion,
)


def eye_field(k, shape):
    return np.broadcast_to(np.eye(k).reshape(k, k, *(1,) * len(shape)), (k, k, *shape)).copy()


# --- independent integer-calculus oracle ------------------------------------------------


def christoffel_block(metric, axes_idx, steps):
    """Textbook Christoffel symbols of one metric block by explicit index loops,
    differentiating along the listed grid axes with centered differences."""
    k = metric.shape[0]
    d = np.zeros((k, k, k, *metric.shape[2:]))  # d[r, a, b] = partial_r g_ab
    for r, ax in enumerate(axes_idx):
        d[r] = np.gradient(metric, steps[ax], axis=2 + ax, edge_order=2)
    inv = np.zeros_like(metric)
    for idx in np.ndindex(*metric.shape[2:]):
        inv[(slice(None), slice(None)) + idx] = np.linalg.inv(metric[(slice(None), slice(None)) + idx])
    out = np.zeros_like(d)
    for i in range(k):
        for j in range(k):
            for l in range(k):
                acc = 0.0
                for r in range(k):
                    acc = acc + 0.5 * inv[i, r] * (d[l, j, r] + d[j, l, r] - d[r, j, l])
                out[i, j, l] = acc
    return out


def fd_christoffel_at(metric_fn, point, h):
    """Christoffel symbols at a point from centered differences of an analytic metric."""
    point = np.asarray(point, float)
    dim = point.size
    g = metric_fn(point)
    dg = np.zeros((dim, dim, dim))
    for r in range(dim):
        e = np.zeros(dim)
        e[r] = h
        dg[r] = (metric_fn(point + e) - metric_fn(point - e)) / (2 * h)
    inv = np.linalg.inv(g)
    # Gamma^i_jl = 1/2 g^ir (d_l g_jr + d_j g_lr - d_r g_jl)
    return 0.5 * (
        np.einsum("ir,ljr->ijl", inv, dg) + np.einsum("ir,jlr->ijl", inv, dg) - np.einsum("ir,rjl->ijl", inv, dg)
    )


def sphere_metric(p):
    c = 4.0 / (1.0 + p[0] ** 2 + p[1] ** 2) ** 2
    return np.diag([c, c])


# --- chart and field validation ---------------------------------------------------------------


def test_chart_validation():
    with pytest.raises(GeometryError):
        ChartSpec(0, 1, (0.1,), (5,))
    with pytest.raises(GeometryError):
        ChartSpec(1, 1, (0.1, -0.1), (5, 5))
    with pytest.raises(GeometryError):
        ChartSpec(1, 1, (0.1, 0.1), (5, 4))
    with pytest.raises(GeometryError):
        ChartSpec(1, 1, (0.1,), (5,))
    chart = ChartSpec(1, 1, (0.1, 0.2), (5, 6))
    assert chart.node_index((0.3, 0.4)) == (3, 2)
    with pytest.raises(GeometryError):
        chart.node_index((0.35, 0.4))


def test_metric_validation():
    shape = (5, 5)
    with pytest.raises(GeometryError):
        DMetric(np.zeros((1, 1, *shape)), eye_field(1, shape))
    bad = eye_field(2, (5, 5, 5))
    bad[0, 1] = 0.3
    with pytest.raises(GeometryError):
        DMetric(bad, eye_field(1, (5, 5, 5)))
    with pytest.raises(GeometryError):
        NConnection(np.full((1, 1, 5, 5), np.nan))


def test_condition_guard():
    chart = ChartSpec(2, 1, (0.1,) * 3, (5,) * 3)
    h = eye_field(2, chart.shape)
    h[0, 0], h[1, 1] = 10.0, 2e-10  # determinant 2e-9 passes, condition number 5e10 does not
    with pytest.raises(GeometryError):
        canonical_dconnection(chart, NConnection.zero(chart), DMetric(h, eye_field(1, chart.shape)))


# --- N-adapted derivatives ---------------------------------------------------------------------


def test_derivative_of_constant_is_zero():
    chart = ChartSpec(2, 1, (0.1,) * 3, (7,) * 3)
    f = np.full(chart.shape, 3.0)
    for a in (1.0, 0.5):
        ch = ChartSpec(2, 1, (0.1,) * 3, (7,) * 3, FractionalOrder(a))
        for direction in range(3):
            assert abs(n_adapted_derivative(ch, NConnection.zero(ch), f, direction, (3, 3, 3))) < 1e-12


def test_horizontal_derivative_sees_n_connection():
    chart = ChartSpec(1, 1, (0.1, 0.1), (7, 7))
    N = NConnection(np.full((1, 1, 7, 7), 0.7))
    _, y = chart.coordinates()
    assert n_adapted_derivative(chart, N, y, 0, (3, 3)) == pytest.approx(-0.7, abs=1e-12)


def test_fractional_derivative_matches_closed_form():
    chart = ChartSpec(1, 1, (1e-3, 0.1), (1001, 5), FractionalOrder(0.5))
    x, _ = chart.coordinates()
    got = n_adapted_derivative(chart, NConnection.zero(chart), x, 0, (1000, 2))
    assert got == pytest.approx(1.0**0.5 / math.gamma(1.5), abs=1e-3)


def test_derivative_index_errors():
    chart = ChartSpec(1, 1, (0.1, 0.1), (5, 5), FractionalOrder(0.5))
    f = np.ones(chart.shape)
    with pytest.raises(IndexError):
        n_adapted_derivative(chart, NConnection.zero(chart), f, 0, (5, 1))
    with pytest.raises(IndexError):
        n_adapted_derivative(chart, NConnection.zero(chart), f, 2, (2, 2))
    with pytest.raises(IndexError):
        n_adapted_derivative(chart, NConnection.zero(chart), f, 0, (0, 2))


# --- connection ---------------------------------------------------------------------------------


def test_flat_connection_vanishes():
    chart, N, g = geo.flat_fixture()
    assert np.max(np.abs(canonical_dconnection(chart, N, g).gamma)) <= 1e-10


def test_sphere_christoffel_against_fd_oracle():
    chart, N, g = geo.sphere_fixture()
    conn = canonical_dconnection(chart, N, g)
    node = chart.node_index((0.2, 0.3, 0.2))
    got = conn.L_h[0, 0, 0][node]
    oracle = fd_christoffel_at(sphere_metric, (0.2, 0.3), chart.steps[0])[0, 0, 0]
    assert got == pytest.approx(oracle, abs=2e-3)
    # exact value from symbolic differentiation; the grid stencil costs about 2e-3
    x1, x2 = sp.symbols("x1 x2")
    lam = 4 / (1 + x1**2 + x2**2) ** 2
    exact = float((sp.diff(lam, x1) / (2 * lam)).subs({x1: 0.2, x2: 0.3}))
    assert exact == pytest.approx(-0.4 / 1.13, rel=1e-12)
    assert got == pytest.approx(exact, abs=3e-3)


def test_y_only_vertical_metric_has_no_horizontal_coefficients():
    chart = ChartSpec(2, 1, (0.1,) * 3, (7,) * 3)
    _, _, y = chart.coordinates()
    gv = (1.0 + 0.5 * y**2)[None, None]
    conn = canonical_dconnection(chart, NConnection.zero(chart), DMetric(eye_field(2, chart.shape), gv))
    assert np.max(np.abs(conn.L_h)) <= 1e-10 and np.max(np.abs(conn.L_v)) <= 1e-10
    assert np.max(np.abs(conn.C_v)) > 0.1


def _zero_n(fixture):
    chart, _, g = fixture
    return chart, NConnection.zero(chart), g


@pytest.mark.parametrize(
    "make",
    [geo.flat_fixture, geo.sphere_fixture, lambda: _zero_n(geo.twisted_fixture()), lambda: _zero_n(geo.random_smooth_fixture(7))],
    ids=["flat", "sphere", "twisted-metric", "random-metric"],
)
def test_integer_order_matches_textbook_oracle(make):
    chart, N, g = make()
    conn = canonical_dconnection(chart, N, g)
    n, m = chart.n, chart.m
    xa, ya = list(range(n)), list(range(n, n + m))
    assert np.allclose(conn.L_h, christoffel_block(g.h, xa, chart.steps), atol=1e-10)
    assert np.allclose(conn.C_v, christoffel_block(g.v, ya, chart.steps), atol=1e-10)
    # mixed blocks with N = 0: C^i_jc = 1/2 h^ik d_c h_jk, L^a_bk = 1/2 v^ac d_k v_bc
    ih = np.linalg.inv(np.moveaxis(g.h, (0, 1), (-2, -1)))
    iv = np.linalg.inv(np.moveaxis(g.v, (0, 1), (-2, -1)))
    for c, ax in enumerate(ya):
        d = np.gradient(g.h, chart.steps[ax], axis=2 + ax, edge_order=2)
        want = 0.5 * np.einsum("...ik,jk...->ij...", ih, d)
        assert np.allclose(conn.C_h[:, :, c], want, atol=1e-10)
    for k, ax in enumerate(xa):
        d = np.gradient(g.v, chart.steps[ax], axis=2 + ax, edge_order=2)
        want = 0.5 * np.einsum("...ac,bc...->ab...", iv, d)
        assert np.allclose(conn.L_v[:, :, k], want, atol=1e-10)


def test_levi_civita_variant_agrees_for_integrable_split():
    chart, N, g = geo.sphere_fixture()
    lc = levi_civita(chart, N, g)
    conn = canonical_dconnection(chart, N, g)
    assert np.allclose(lc[:2, :2, :2], conn.L_h, atol=1e-12)


# --- torsion ------------------------------------------------------------------------------------


def test_flat_torsion_vanishes():
    chart, N, g = geo.flat_fixture()
    assert np.max(np.abs(torsion(chart, N, canonical_dconnection(chart, N, g)))) <= 1e-10


@pytest.mark.parametrize(
    "make",
    [geo.sphere_fixture, geo.twisted_fixture, lambda: geo.random_smooth_fixture(3), lambda: geo.random_smooth_fixture(4, n=2, m=2)],
)
def test_pure_torsion_blocks_vanish(make):
    chart, N, g = make()
    T = torsion(chart, N, canonical_dconnection(chart, N, g))
    mask = geo.validity_mask(chart)
    n = chart.n
    assert np.max(np.abs(T[:n, :n, :n][..., mask])) <= 1e-8
    assert np.max(np.abs(T[n:, n:, n:][..., mask])) <= 1e-8


def test_mixed_torsion_matches_frame_commutator():
    chart, N, g = geo.twisted_fixture()
    T = torsion(chart, N, canonical_dconnection(chart, N, g))
    n, m = chart.n, chart.m
    Nc = N.coeffs

    def e(j, f):  # e_j = d_j - N_j^a d_a, by hand
        out = np.gradient(f, chart.steps[j], axis=j, edge_order=2)
        for a in range(m):
            out = out - Nc[j, a] * np.gradient(f, chart.steps[n + a], axis=n + a, edge_order=2)
        return out

    mask = geo.validity_mask(chart)
    for a in range(m):
        # [e_1, e_2] y^a with e_j y^a = -N_j^a
        comm = e(0, -Nc[1, a]) - e(1, -Nc[0, a])
        assert np.allclose(T[n + a, 0, 1][mask], -comm[mask], atol=1e-8)
        assert np.max(np.abs(comm[mask])) > 0.1


@settings(max_examples=10)
@given(st.integers(0, 10_000))
def test_torsion_and_curvature_antisymmetry(seed):
    chart, N, g = geo.random_smooth_fixture(seed)
    conn = canonical_dconnection(chart, N, g)
    T = torsion(chart, N, conn)
    R = curvature(chart, N, conn)
    assert np.max(np.abs(T + np.swapaxes(T, 1, 2))) <= 1e-8 * max(1, np.max(np.abs(T)))
    assert np.max(np.abs(R + np.swapaxes(R, 2, 3))) <= 1e-8 * max(1, np.max(np.abs(R)))


# --- curvature, Ricci, Einstein -----------------------------------------------------------------


def test_flat_curvature_outputs_vanish():
    b = curvature_bundle(*geo.flat_fixture())
    for arr in (b.curvature, b.ricci, b.scalar, b.einstein):
        assert np.max(np.abs(arr)) <= 1e-8


def test_sphere_curvature():
    chart, N, g = geo.sphere_fixture()
    b = curvature_bundle(chart, N, g)
    K = sectional_curvature(g, b.curvature)[b.mask]
    assert np.all(np.abs(K - 1.0) <= 1e-2)
    assert np.all(np.abs(b.h_scalar[b.mask] - 2.0) <= 0.05)
    assert np.max(np.abs(b.v_scalar)) <= 1e-10


@settings(max_examples=8)
@given(st.integers(0, 10_000), st.sampled_from([(2, 1), (2, 2), (3, 1)]))
def test_einstein_trace_identity(seed, dims):
    n, m = dims
    chart, N, g = geo.random_smooth_fixture(seed, n, m)
    R = curvature(chart, N, canonical_dconnection(chart, N, g))
    ric, sR, hR, vS, G = ricci_scalar_einstein(chart, g, R)
    inv = np.linalg.inv(np.moveaxis(g.full(), (0, 1), (-2, -1)))
    trace = np.einsum("...ab,ab...->...", inv, G)
    want = sR * (1 - (n + m) / 2)
    assert np.max(np.abs(trace - want)) <= 1e-6 * max(1.0, np.max(np.abs(sR)))
    assert np.allclose(sR, hR + vS)


@pytest.mark.parametrize("alpha", [1.0, 0.7])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_metric_compatibility(alpha, seed):
    chart, N, g = geo.random_smooth_fixture(seed, alpha=alpha)
    conn = canonical_dconnection(chart, N, g)
    Dg = metric_compatibility(chart, N, g, conn)
    assert np.max(np.abs(Dg)) <= 1e-10


def test_fractional_sphere_runs_and_is_finite_on_mask():
    b = curvature_bundle(*geo.sphere_fixture(0.9))
    assert np.all(np.isfinite(b.scalar[b.mask]))


# --- tables -------------------------------------------------------------------------------------


def test_fixture_table_round_trip(tmp_path):
    chart, N, g = geo.twisted_fixture(0.8)
    p = tmp_path / "twisted.txt"
    geo.save_fixture(p, chart, N, g)
    chart2, N2, g2 = geo.load_fixture(p)
    assert chart2 == chart
    assert np.array_equal(N2.coeffs, N.coeffs)
    assert np.array_equal(g2.h, g.h) and np.array_equal(g2.v, g.v)


def test_table_rows_in_any_order(tmp_path):
    chart, N, g = geo.flat_fixture(1, 1, count=5)
    p = tmp_path / "flat.txt"
    geo.save_fixture(p, chart, N, g)
    lines = p.read_text().splitlines()
    head, body = lines[:2], lines[2:]
    p.write_text("\n".join(head + body[::-1]) + "\n")
    chart2, _, g2 = geo.load_fixture(p)
    assert chart2 == chart and np.array_equal(g2.h, g.h)


@pytest.mark.parametrize(
    "text",
    [
        "",
        "a b c\n0 0 1\n",
        "x1 y1 gh_11 gv_11 N_1_1\n0 0 1 1 0\n0.1 0 1 1 0\n",
        "x1 y1 gh_11\n0 0 1\n",
        "y1 x1 gh_11\n0 0 1\n",
    ],
)
def test_bad_tables(tmp_path, text):
    p = tmp_path / "bad.txt"
    p.write_text(text)
    with pytest.raises((GeometryError, ValueError)):
        geo.load_fixture(p)
