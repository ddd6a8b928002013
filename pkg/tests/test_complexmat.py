import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mommi_ptc.complexmat import (
    DimensionError,
    cmatmul,
    passivity_excess,
    random_unitary,
    rel_frob_distance,
    sigma_max,
    symmetry_error,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
# entries on a 1e-3 grid keep relative differences far above the underflow range
grid = st.integers(-10_000, 10_000).map(lambda i: i / 1000)


def cmats(n, m, elements=finite):
    return st.tuples(arrays(float, (n, m), elements=elements), arrays(float, (n, m), elements=elements)).map(
        lambda t: t[0] + 1j * t[1]
    )


def test_cmatmul_identity_and_j_squared():
    a = np.array([[1 + 2j, 3], [-1j, 0.5]])
    assert np.array_equal(cmatmul(np.eye(2), a), a)
    j = 1j * np.eye(2)
    assert np.array_equal(cmatmul(j, j), -np.eye(2))


def test_cmatmul_matches_triple_loop(rng):
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    ref = np.zeros((3, 3), dtype=complex)
    for i in range(3):
        for j in range(3):
            for t in range(3):
                ref[i, j] += a[i, t] * b[t, j]
    assert np.max(np.abs(cmatmul(a, b) - ref)) <= 1e-12


def test_cmatmul_shape_errors():
    with pytest.raises(DimensionError):
        cmatmul(np.ones((2, 3)), np.ones((2, 3)))
    with pytest.raises(ValueError):
        cmatmul(np.array([[np.nan]]), np.ones((1, 1)))


@settings(max_examples=50, deadline=None)
@given(cmats(3, 3), cmats(3, 3), cmats(3, 3))
def test_cmatmul_associative(a, b, c):
    left = cmatmul(cmatmul(a, b), c)
    right = cmatmul(a, cmatmul(b, c))
    scale = np.linalg.norm(np.abs(a) @ np.abs(b) @ np.abs(c))
    assert np.linalg.norm(left - right) <= 1e-10 * max(scale, 1e-300)


def test_rel_frob_distance_examples(rng):
    b = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
    assert rel_frob_distance(b, b) == 0.0
    assert rel_frob_distance(np.zeros_like(b), b) == pytest.approx(1.0, abs=1e-15)
    assert rel_frob_distance(2 * b, b) == pytest.approx(1.0, abs=1e-15)


def test_rel_frob_distance_tiny_scale():
    b = np.full((2, 2), 1e-200)
    assert rel_frob_distance(np.zeros((2, 2)), b) == pytest.approx(1.0)


def test_rel_frob_distance_errors():
    with pytest.raises(ZeroDivisionError):
        rel_frob_distance(np.ones((2, 2)), np.zeros((2, 2)))
    with pytest.raises(DimensionError):
        rel_frob_distance(np.ones((2, 2)), np.ones((2, 3)))


@settings(max_examples=50, deadline=None)
@given(cmats(3, 2, grid), cmats(3, 2, grid))
def test_rel_frob_distance_zero_iff_equal(a, b):
    if not np.any(b):
        return
    d = rel_frob_distance(a, b)
    assert d >= 0
    assert (d == 0) == np.array_equal(a, b)


def test_passivity_examples(rng):
    assert passivity_excess(np.eye(4)) == 0.0
    assert passivity_excess(2 * np.eye(4)) == pytest.approx(1.0, abs=1e-12)
    assert passivity_excess(random_unitary(6, rng)) <= 1e-9


def test_sigma_max_matches_svd(rng):
    for shape in [(3, 3), (5, 2), (2, 5)]:
        w = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        assert sigma_max(w) == pytest.approx(np.linalg.norm(w, 2), rel=1e-6)
    # start vector orthogonal to the ones vector must still find the top direction
    assert sigma_max(np.array([[1.0, -1.0], [1.0, -1.0]])) == pytest.approx(2.0)


@settings(max_examples=30, deadline=None)
@given(cmats(4, 4), st.integers(0, 2**31))
def test_passivity_unitary_invariance(w, seed):
    u = random_unitary(4, np.random.default_rng(seed))
    w = w / 5.0
    assert passivity_excess(u @ w) == pytest.approx(passivity_excess(w), abs=1e-8)


def test_symmetry_examples():
    assert symmetry_error(np.diag([1 + 1j, 2, -3])) == 0.0
    assert symmetry_error(np.array([[0, 1], [0, 0]])) == pytest.approx(np.sqrt(2))
    with pytest.raises(DimensionError):
        symmetry_error(np.ones((2, 3)))


@settings(max_examples=50, deadline=None)
@given(cmats(4, 4))
def test_symmetrized_is_symmetric(y):
    assert symmetry_error((y + y.T) / 2) <= 1e-14
