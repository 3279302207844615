from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracflow.diffpoly import (
    MIXED,
    CompiledPolynomial,
    ScalarDiffPoly,
    VectorDiffPoly,
    commutator,
    constant_curvature_shift,
    euler_operator,
    evaluate,
    from_text,
    generate_hierarchy,
    op_H,
    op_J,
    op_R,
    scalar_specialization,
    scalar_text,
    scaling_weight,
    to_text,
    v,
)
from fracflow.diffpoly import reference as ref
from fracflow.golden import compare_level, default_golden_dir, golden_name, parse_golden, render_level

from strategies import vectors

S = ScalarDiffPoly.dot


def test_level_zero():
    lvl = generate_hierarchy(0)[0]
    assert (lvl.flow, lvl.covector, lvl.hamiltonian) == (v(1), v(0), S(0, 0).scale(F(1, 2)))


def test_printed_first_and_second_hamiltonian():
    levels = generate_hierarchy(2)
    printed = ref.hamiltonians_printed()
    assert levels[1].hamiltonian == printed[1]
    assert levels[2].hamiltonian == printed[2]
    assert euler_operator(printed[2]) == levels[2].covector


def test_literal_second_hamiltonian_is_inconsistent():
    lit = ref.second_hamiltonian_literal()
    assert euler_operator(lit) != generate_hierarchy(2)[2].covector


@pytest.mark.parametrize("k", [0, 1, 2])
def test_bi_hamiltonian_chain(k):
    lvl = generate_hierarchy(2)[k]
    assert euler_operator(lvl.hamiltonian) == lvl.covector
    assert op_H(lvl.covector) == lvl.flow


@pytest.mark.parametrize("k", range(5))
def test_weights(k):
    lvl = generate_hierarchy(4)[k]
    assert scaling_weight(lvl.flow) == 2 + 2 * k
    assert scaling_weight(lvl.hamiltonian) == 2 + 2 * k
    assert scaling_weight(lvl.covector) == 1 + 2 * k


def test_recursion_reproduces_flows():
    levels = generate_hierarchy(3)
    for a, b in zip(levels, levels[1:]):
        assert op_R(a.flow) == b.flow
        assert op_J(a.flow) == b.covector


def test_first_flow_matches_print():
    assert op_R(v(1)) == ref.first_flow()


def test_second_flow_matches_corrected_form():
    assert op_R(op_R(v(1))) == ref.second_flow_corrected()


def test_second_flow_corrections_are_exactly_the_two_misprints():
    e2 = op_R(op_R(v(1)))
    assert ref.second_flow_printed_bracket() - e2 == (S(1, 1) * v(1)).scale(5)
    assert ref.second_flow_literal() - e2 == (S(1, 1) * v(1)).scale(5) - (S(1, 1) * v(0)).scale(F(1, 2))
    assert scaling_weight(ref.second_flow_literal()) == MIXED
    assert scaling_weight((S(1, 1) * v(0))) == 5


def test_sectors_differ_only_in_symbol():
    h, w = generate_hierarchy(2, "h"), generate_hierarchy(2, "v")
    for a, b in zip(h, w):
        ta, tb = a.as_text(), b.as_text()
        assert {k: x.replace("v", "w") for k, x in ta.items()} == tb
        assert from_text(tb["flow"], "vector", "w") == a.flow


def test_generate_argument_checks():
    with pytest.raises(ValueError):
        generate_hierarchy(1, "x")
    with pytest.raises(ValueError):
        generate_hierarchy(-1)
    with pytest.raises(ValueError):
        generate_hierarchy(6)  # order 13 exceeds the default cap


def test_curvature_shift():
    e0, e1 = v(1), op_R(v(1))
    assert constant_curvature_shift(e1, e0, 0) is e1
    assert constant_curvature_shift(e1, e0, F(1)) == op_R(v(1)) - v(1)


@given(vectors(), vectors(), st.fractions(-3, 3), st.fractions(-3, 3))
def test_curvature_shift_linear(a, b, c1, c2):
    lhs = constant_curvature_shift(a, b, c1 + c2)
    rhs = constant_curvature_shift(a, b, c1) + constant_curvature_shift(VectorDiffPoly(), b, c2)
    assert lhs == rhs


def test_scalar_specialization():
    assert scalar_text(op_R(v(1))) == "u3 + 3/2*u1*u0^2"
    spec = scalar_specialization(op_R(v(1)))
    assert spec == {(3,): 1, (0, 0, 1): F(3, 2)}
    # classical fifth-order scalar mKdV
    assert scalar_text(op_R(op_R(v(1)))) == "u5 + 5/2*u3*u0^2 + 10*u2*u1*u0 + 5/2*u1^3 + 15/8*u1*u0^4"


# --- numeric evaluation and commutativity --------------------------------------------


def _profile(n, c):
    l = 2 * np.pi * np.arange(n) / n
    cols = [np.cos(l) + 0.3 * np.sin(2 * l), 0.5 * np.sin(l) + 0.2 * np.cos(3 * l), 0.4 * np.cos(2 * l)]
    return l, np.stack(cols[:c], axis=-1)


def _spectral_derivs(u, top):
    n = u.shape[0]
    k = np.fft.fftfreq(n, 1.0 / n)
    uh = np.fft.fft(u, axis=0)
    return [np.real(np.fft.ifft((1j * k[:, None]) ** j * uh, axis=0)) for j in range(top + 1)]


def _numeric_frechet(p, q_vals, u, top):
    """d/de p(u + e q) at e = 0 by the five-point rule, exact for polynomials of degree <= 4 in e."""
    def at(eps):
        return evaluate(p, _spectral_derivs(u + eps * q_vals, top))

    eps = 0.1  # no truncation error, so a large step only reduces roundoff
    return (-at(2 * eps) + 8 * at(eps) - 8 * at(-eps) + at(-2 * eps)) / (12 * eps)


@pytest.mark.parametrize("c", [1, 2, 3])
def test_flows_commute_numerically(c):
    levels = generate_hierarchy(2)
    e0, e1 = levels[0].flow, levels[1].flow
    _, u = _profile(64, c)
    derivs = _spectral_derivs(u, 8)
    q0, q1 = evaluate(e0, derivs), evaluate(e1, derivs)
    bracket = _numeric_frechet(e0, q1, u, 8) - _numeric_frechet(e1, q0, u, 8)
    assert np.max(np.abs(bracket)) <= 1e-8
    # the symbolic bracket agrees, and is zero
    assert commutator(e0, e1) == 0
    assert commutator(e1, levels[2].flow) == 0


def test_noncommuting_fields_detected():
    p = (S(0, 0) * v(0))
    _, u = _profile(128, 2)
    derivs = _spectral_derivs(u, 8)
    e1 = generate_hierarchy(1)[1].flow
    num = _numeric_frechet(p, evaluate(e1, derivs), u, 8) - _numeric_frechet(e1, evaluate(p, derivs), u, 8)
    sym = evaluate(commutator(p, e1), _spectral_derivs(u, 8))
    assert np.max(np.abs(num)) > 1e-2
    assert np.allclose(num, sym, atol=1e-8)


def test_compiled_matches_evaluate():
    _, u = _profile(64, 2)
    derivs = _spectral_derivs(u, 8)
    for lvl in generate_hierarchy(2):
        for expr in (lvl.flow, lvl.hamiltonian):
            assert np.allclose(CompiledPolynomial(expr)(derivs), evaluate(expr, derivs), atol=1e-12)


# --- golden files ------------------------------------------------------------------------------


def test_golden_files_match():
    for sector in ("h", "v"):
        for lvl in generate_hierarchy(4, sector):
            assert compare_level(lvl).ok


def test_golden_level_two_has_printed_content():
    text = parse_golden((default_golden_dir() / golden_name("h", 1)).read_text())
    assert text["flow"] == "v3 + 3/2*<v0,v0>*v1"
    assert text["hamiltonian"] == "-1/2*<v1,v1> + 1/8*<v0,v0>^2"


def test_golden_mismatch_has_diff_excerpt(tmp_path):
    lvl = generate_hierarchy(1)[1]
    (tmp_path / golden_name("h", 1)).write_text(render_level(lvl).replace("3/2", "5/2"))
    cmp = compare_level(lvl, tmp_path)
    assert not cmp.ok
    assert "-flow = v3 + 5/2*<v0,v0>*v1" in cmp.excerpt
    assert "+flow = v3 + 3/2*<v0,v0>*v1" in cmp.excerpt


def test_golden_missing_file(tmp_path):
    cmp = compare_level(generate_hierarchy(0)[0], tmp_path)
    assert not cmp.ok and "cannot read" in cmp.excerpt


def test_text_of_level_is_deterministic():
    a = [render_level(x) for x in generate_hierarchy(3)]
    b = [render_level(x) for x in generate_hierarchy(3)]
    assert a == b
    assert to_text(generate_hierarchy(1)[1].covector) == "v2 + 1/2*<v0,v0>*v0"


@pytest.mark.parametrize("sector", ["h", "v"])
def test_composed_hamiltonian_operator_steps_the_hierarchy(sector):
    # H o J o H applied to a covector gives the next flow, the same as R o H
    levels = generate_hierarchy(3, sector)
    for lo, hi in zip(levels, levels[1:]):
        assert op_J(lo.flow) == hi.covector
        assert op_H(op_J(op_H(lo.covector))) == hi.flow == op_R(op_H(lo.covector))
