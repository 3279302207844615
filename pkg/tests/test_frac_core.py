import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from fracflow.frac_core import (
    FractionalOrder,
    PowerTerm,
    SampledFunction,
    caputo_axis,
    caputo_power,
    caputo_sampled,
    frac_differential_coeff,
    fractional_integral_matrix,
    l1_matrix,
)

ALPHAS = (0.3, 0.5, 0.8)


def caputo_by_quadrature(alpha, df, x, lower_power=0.0):
    """Adaptive quadrature of the Caputo integral ``int_0^x (x-s)^-alpha s^lower_power df(s) ds``
    with both algebraic end singularities handled by the quadrature weight."""
    val, _ = quad(df, 0.0, x, weight="alg", wvar=(lower_power, -alpha), epsabs=1e-14, epsrel=1e-13)
    return val / math.gamma(1.0 - alpha)


# --- types ------------------------------------------------------------------


@pytest.mark.parametrize("bad", [0.0, -0.1, 1.0001, float("nan"), float("inf")])
def test_order_rejects_out_of_range(bad):
    with pytest.raises(ValueError):
        FractionalOrder(bad)


def test_order_one_is_integer():
    assert FractionalOrder(1).is_integer and not FractionalOrder(0.999).is_integer


def test_sampled_function_validation():
    with pytest.raises(ValueError):
        SampledFunction(0.1, (1.0, 2.0))
    with pytest.raises(ValueError):
        SampledFunction(0.0, (1.0, 2.0, 3.0))
    with pytest.raises(ValueError):
        SampledFunction(0.1, (1.0, 2.0, 3.0), lower_terminal=1.0)


def test_power_term_validation():
    with pytest.raises(ValueError):
        PowerTerm(1.0, -1.0)
    with pytest.raises(ValueError):
        PowerTerm(1.0, float("inf"))


# --- closed form -----------------------------------------------------------


def test_caputo_power_of_constant_is_zero():
    assert caputo_power(0.5, PowerTerm(1.0, 0.0), 2.0) == 0.0


def test_caputo_power_integer_limit():
    assert caputo_power(1.0, PowerTerm(1.0, 2.0), 3.0) == 6.0


def test_caputo_power_half_order_of_x_matches_quadrature():
    oracle = caputo_by_quadrature(0.5, lambda s: 1.0, 1.0)
    assert oracle == pytest.approx(2 / math.sqrt(math.pi), rel=1e-12)
    assert caputo_power(0.5, PowerTerm(1.0, 1.0), 1.0) == pytest.approx(oracle, rel=1e-12)


@pytest.mark.parametrize("alpha", ALPHAS)
@pytest.mark.parametrize("p", [0.5, 1.0, 2.0, 3.0])
def test_caputo_power_matches_quadrature(alpha, p):
    x = 1.7
    oracle = caputo_by_quadrature(alpha, lambda s: p, x, lower_power=p - 1.0)
    assert caputo_power(alpha, PowerTerm(1.0, p), x) == pytest.approx(oracle, rel=1e-8)


def test_caputo_power_singular_at_terminal():
    with pytest.raises(ZeroDivisionError):
        caputo_power(0.8, PowerTerm(1.0, 0.5), 0.0)
    with pytest.raises(ValueError):
        caputo_power(0.5, PowerTerm(1.0, 1.0), -1.0)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_near_integer_order_close_to_ordinary_derivative(p):
    for x in np.linspace(0.5, 2.0, 7):
        exact = p * x ** (p - 1)
        assert abs(caputo_power(0.999, PowerTerm(1.0, p), x) - exact) < 0.01 * exact


def test_gamma_accuracy():
    # the stdlib gamma is the one evaluation route; checked against 30-digit mpmath
    mpmath.mp.dps = 30
    for x in np.concatenate([np.linspace(0.01, 1, 40), np.linspace(1, 20, 60)]):
        ref = float(mpmath.gamma(mpmath.mpf(float(x))))
        assert abs(math.gamma(x) - ref) <= 1e-13 * abs(ref)


# --- differential coefficient ---------------------------------------------------


def test_frac_differential_coeff_examples():
    assert frac_differential_coeff(1.0, 7.3) == 1.0
    assert frac_differential_coeff(0.5, 1.0) == pytest.approx(1 / math.gamma(1.5), rel=1e-14)
    assert frac_differential_coeff(0.5, 0.0) == 0.0


# --- sampled -------------------------------------------------------------------


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9, 1.0])
@pytest.mark.parametrize("index", [1, 2, 4])
def test_constants_annihilated(alpha, index):
    f = SampledFunction(0.1, (5.0,) * 5)
    assert abs(caputo_sampled(alpha, f, index)) <= 1e-12


def test_sampled_linear_half_order():
    f = SampledFunction.from_callable(lambda x: x, 1e-3, 1001)
    assert caputo_sampled(0.5, f, 1000) == pytest.approx(2 / math.sqrt(math.pi), abs=1e-3)


def test_sampled_quadratic_integer_order():
    f = SampledFunction.from_callable(lambda x: x**2, 0.01, 101)
    assert caputo_sampled(1.0, f, 50) == pytest.approx(1.0, abs=1e-9)


def test_sampled_index_errors():
    f = SampledFunction(0.1, (1.0, 2.0, 3.0))
    with pytest.raises(IndexError):
        caputo_sampled(0.5, f, 3)
    with pytest.raises(IndexError):
        caputo_sampled(0.5, f, 0)


def l1_order(alpha, p):
    errs = []
    for n in (128, 256, 512):
        f = SampledFunction.from_callable(lambda x: x**p, 1.0 / n, n + 1)
        errs.append(abs(caputo_sampled(alpha, f, n) - caputo_power(alpha, PowerTerm(1.0, p), 1.0)))
    return errs, (math.log2(errs[1] / errs[2]) if min(errs) > 0 else math.inf)


@pytest.mark.parametrize("alpha", ALPHAS)
@pytest.mark.parametrize("p", [0.5, 2.0, 3.0])
def test_l1_convergence_order(alpha, p):
    _, order = l1_order(alpha, p)
    assert order >= 2 - alpha - 0.2
    assert abs(order - (2 - alpha)) <= 0.2 or p < 1  # x^0.5 is limited by its own regularity


@pytest.mark.parametrize("alpha", ALPHAS)
def test_l1_exact_on_linear(alpha):
    errs, _ = l1_order(alpha, 1.0)
    assert max(errs) < 1e-12


@given(
    st.floats(0.05, 1.0),
    st.lists(st.floats(-10, 10), min_size=6, max_size=6),
    st.lists(st.floats(-10, 10), min_size=6, max_size=6),
    st.floats(-3, 3),
    st.floats(-3, 3),
    st.integers(1, 5),
)
def test_linearity(alpha, fv, gv, a, b, idx):
    h = 0.1
    f, g = SampledFunction(h, fv), SampledFunction(h, gv)
    comb = SampledFunction(h, tuple(a * x + b * y for x, y in zip(fv, gv)))
    lhs = caputo_sampled(alpha, comb, idx)
    rhs = a * caputo_sampled(alpha, f, idx) + b * caputo_sampled(alpha, g, idx)
    scale = 1 + sum(abs(x) for x in fv + gv) * (abs(a) + abs(b)) * h ** (-alpha)
    assert abs(lhs - rhs) <= 1e-12 * scale


@given(st.floats(0.05, 0.999), st.floats(-5, 5))
def test_constants_annihilated_property(alpha, c):
    f = SampledFunction(0.05, (c,) * 8)
    assert all(abs(caputo_sampled(alpha, f, i)) <= 1e-12 for i in range(1, 8))


# --- matrices ------------------------------------------------------------------


def test_l1_matrix_matches_pointwise():
    vals = np.sin(np.linspace(0, 2, 30))
    f = SampledFunction(2 / 29, tuple(vals))
    m = l1_matrix(0.4, 30, 2 / 29)
    assert m[0].tolist() == [0.0] * 30
    for i in range(1, 30):
        assert m[i] @ vals == pytest.approx(caputo_sampled(0.4, f, i), abs=1e-12)


@pytest.mark.parametrize("beta", [0.2, 0.5, 1.0])
def test_fractional_integral_exact_on_linear(beta):
    n, h = 40, 0.05
    x = h * np.arange(n)
    got = fractional_integral_matrix(beta, n, h) @ (1.0 + 2.0 * x)
    want = x**beta / math.gamma(beta + 1) + 2.0 * x ** (beta + 1) / math.gamma(beta + 2)
    assert np.allclose(got, want, atol=1e-12)


def test_fractional_integral_rejects_nonpositive():
    with pytest.raises(ValueError):
        fractional_integral_matrix(0.0, 10, 0.1)


def test_caputo_axis_along_each_axis():
    x = 0.01 * np.arange(101)
    grid = np.add.outer(x, 2 * x)  # f(x, y) = x + 2y
    d0 = caputo_axis(0.5, grid, 0.01, axis=0)
    d1 = caputo_axis(0.5, grid, 0.01, axis=1)
    assert np.allclose(d0[1:, :], (x[1:] ** 0.5 / math.gamma(1.5))[:, None], atol=1e-12)
    assert np.allclose(d1[:, 1:], (2 * x[1:] ** 0.5 / math.gamma(1.5))[None, :], atol=1e-12)
    assert np.allclose(caputo_axis(1.0, grid, 0.01, axis=1), 2.0)
