import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fracflow.klein import (
    HVector,
    KleinElement,
    bracket,
    bracket_identities,
    ck_inner,
    connection_x,
    decompose,
    embed_p,
    embed_rotation,
    frame_x,
    frame_y,
    perp_rotation,
    printed_normal_flow_residual,
    random_element,
    random_skew,
    recompose,
    so_block,
)

finite = st.floats(-10, 10, allow_nan=False)


def vec(n):
    return arrays(float, n, elements=finite)


def test_rejects_non_skew_and_bad_shape():
    with pytest.raises(ValueError):
        KleinElement(2, np.ones((3, 3)))
    with pytest.raises(ValueError):
        KleinElement(2, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        KleinElement(1, np.array([[0.0, np.nan], [-np.nan, 0.0]]))
    with pytest.raises(ValueError):
        HVector(2, [1.0, 2.0, 3.0])


def test_embed_zero_and_unit():
    assert np.array_equal(embed_p(HVector.of([0.0, 0.0])).matrix, np.zeros((3, 3)))
    want = np.array([[0, 1, 0], [-1, 0, 0], [0, 0, 0]], dtype=float)
    assert np.array_equal(embed_p(HVector.of([1.0, 0.0])).matrix, want)


@given(st.integers(1, 6).flatmap(vec))
def test_embed_is_skew(p):
    m = embed_p(HVector.of(p)).matrix
    assert np.array_equal(m, -m.T)


def test_ck_examples():
    p = embed_p(HVector.of([3.0, 4.0]))
    assert ck_inner(p, p) == 25.0
    zero = KleinElement(2, np.zeros((3, 3)))
    assert ck_inner(zero, random_element(np.random.default_rng(1), 2)) == 0.0


@pytest.mark.parametrize("n", range(2, 7))
def test_ck_is_euclidean_dot(n):
    rng = np.random.default_rng(n)
    for _ in range(50):
        p, q = rng.standard_normal(n), rng.standard_normal(n)
        assert abs(ck_inner(embed_p(HVector.of(p)), embed_p(HVector.of(q))) - p @ q) <= 1e-12


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_ck_symmetric(seed, n):
    rng = np.random.default_rng(seed)
    a, b = random_element(rng, n), random_element(rng, n)
    assert abs(ck_inner(a, b) - ck_inner(b, a)) <= 1e-12


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_bracket_properties(seed, n):
    rng = np.random.default_rng(seed)
    a, b, c = (random_element(rng, n) for _ in range(3))
    assert bracket(a, a).distance(KleinElement(n, np.zeros((n + 1, n + 1)))) == 0.0
    jac = bracket(a, bracket(b, c)) + bracket(b, bracket(c, a)) + bracket(c, bracket(a, b))
    assert np.max(np.abs(jac.matrix)) < 1e-10
    assert bracket(a, b).distance(-bracket(b, a)) < 1e-12


def test_bracket_dimension_mismatch():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        bracket(random_element(rng, 2), random_element(rng, 3))


def test_frame_bracket_block_two_dims():
    # [e_X, e_Y] = -[[0, 0], [0, e_perp block]] for n = 2
    e_par, e_perp = 0.6, np.array([0.8])
    got = bracket(frame_x(2), frame_y(e_par, e_perp))
    want = np.zeros((3, 3))
    want[1, 2], want[2, 1] = -0.8, 0.8
    assert np.allclose(got.matrix, want, atol=1e-15)
    assert got.distance(-perp_rotation(e_perp)) == 0.0


def test_decompose_examples():
    par, perp = decompose(HVector.of([1.0, 0.0, 0.0]))
    assert par == 1.0 and np.array_equal(perp.components, [0.0, 0.0])
    par, perp = decompose(HVector.of([0.6, 0.8]))
    assert par == 0.6 and perp.components.tolist() == [0.8]


@given(st.integers(2, 6).flatmap(vec))
def test_decompose_pythagoras_and_roundtrip(p):
    par, perp = decompose(HVector.of(p))
    assert par**2 + perp.components @ perp.components == pytest.approx(p @ p, rel=1e-12, abs=1e-12)
    assert np.array_equal(recompose(par, perp).components, p)


@pytest.mark.parametrize("n", range(2, 6))
def test_bracket_identities_hold(n):
    rng = np.random.default_rng(100 + n)
    for _ in range(40):
        res = bracket_identities(
            rng.standard_normal(n - 1),
            float(rng.standard_normal()),
            rng.standard_normal(n - 1),
            rng.standard_normal(n - 1),
            random_skew(rng, n - 1),
        )
        assert max(res.values()) <= 1e-12, res


def test_normal_flow_literal_reading_is_a_misprint():
    rng = np.random.default_rng(3)
    varpi, theta = rng.standard_normal(2), random_skew(rng, 2)
    assert printed_normal_flow_residual(varpi, theta, 1.0, np.zeros(2)) < 1e-12
    assert printed_normal_flow_residual(varpi, theta, 0.6, rng.standard_normal(2)) > 1e-2


def test_block_helpers():
    b = so_block([1.0, 2.0], np.array([[0.0, 3.0], [-3.0, 0.0]]))
    assert np.array_equal(b, -b.T) and b[0, 2] == 2.0 and b[1, 2] == 3.0
    assert embed_rotation(b).matrix[1:, 1:].tolist() == b.tolist()
    assert connection_x([1.0]).distance(perp_rotation([1.0])) == 0.0


def test_elements_are_immutable():
    e = frame_x(2)
    with pytest.raises(ValueError):
        e.matrix[0, 1] = 5.0
