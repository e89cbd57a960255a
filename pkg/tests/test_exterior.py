from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinbound.exterior import (
    ExteriorForm, basis, basis_index, compound_matrix, random_form, wedge,
)


def test_basis_is_lexicographic():
    assert basis(4, 2) == ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
    assert basis_index(4, 2)[(1, 3)] == 4
    assert basis(3, 0) == ((),)


def test_from_terms_sorts_with_sign():
    a = ExteriorForm.from_terms(3, 2, {(1, 0): 2.0, (0, 2): 1.0})
    assert np.allclose(a.coefficients, [-2.0, 1.0, 0.0])


def test_repeated_index_vanishes():
    a = ExteriorForm.from_terms(3, 2, {(1, 1): 1.0, (0, 1): 2.0})
    assert np.allclose(a.coefficients, [2.0, 0.0, 0.0])


def test_wedge_of_basis_vectors():
    e = [ExteriorForm.from_vector(v) for v in np.eye(3)]
    e01 = wedge(e[0], e[1])
    assert np.allclose(e01.coefficients, [1, 0, 0])
    assert np.allclose(wedge(e[1], e[0]).coefficients, [-1, 0, 0])
    vol = wedge(e01, e[2])
    assert vol.degree == 3 and np.allclose(vol.coefficients, [1.0])


def test_degree_beyond_dimension_is_zero():
    e = ExteriorForm.from_vector([1.0, 2.0])
    top = wedge(e, ExteriorForm.from_vector([0.0, 1.0]))
    assert wedge(top, e).coefficients.size == 0


@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_vector_wedge_is_alternating(n, seed):
    rng = np.random.default_rng(seed)
    u = ExteriorForm.from_vector(rng.standard_normal(n))
    v = ExteriorForm.from_vector(rng.standard_normal(n))
    uv, vu = wedge(u, v), wedge(v, u)
    assert np.allclose(uv.coefficients, -vu.coefficients)
    assert np.allclose(wedge(u, u).coefficients, 0.0)


@given(st.integers(3, 6), st.integers(1, 2), st.integers(1, 2), st.integers(0, 2**32 - 1))
def test_graded_commutativity_and_associativity(n, p, q, seed):
    rng = np.random.default_rng(seed)
    a, b = random_form(rng, n, p), random_form(rng, n, q)
    c = random_form(rng, n, 1)
    sign = (-1) ** (p * q)
    assert np.allclose(wedge(a, b).coefficients, sign * wedge(b, a).coefficients)
    left = wedge(wedge(a, b), c).coefficients
    right = wedge(a, wedge(b, c)).coefficients
    assert np.allclose(left, right)


@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_compound_matrix_is_multiplicative(n, seed):
    rng = np.random.default_rng(seed)
    A, B = rng.standard_normal((n, n)), rng.standard_normal((n, n))
    for k in range(1, min(n, 4) + 1):
        assert np.allclose(compound_matrix(A @ B, k), compound_matrix(A, k) @ compound_matrix(B, k))


def test_compound_matrix_acts_on_wedges(rng):
    A = rng.standard_normal((4, 3))
    u, v = rng.standard_normal(3), rng.standard_normal(3)
    uv = wedge(ExteriorForm.from_vector(u), ExteriorForm.from_vector(v)).coefficients
    AuAv = wedge(ExteriorForm.from_vector(A @ u), ExteriorForm.from_vector(A @ v)).coefficients
    assert compound_matrix(A, 2).shape == (comb(4, 2), comb(3, 2))
    assert np.allclose(compound_matrix(A, 2) @ uv, AuAv)


def test_top_compound_is_determinant(rng):
    A = rng.standard_normal((4, 4))
    assert np.isclose(compound_matrix(A, 4)[0, 0], np.linalg.det(A))


def test_arithmetic_and_norm():
    a = ExteriorForm.from_terms(3, 1, {(0,): 3.0, (2,): 4.0})
    assert a.norm_sq() == pytest.approx(25.0)
    assert np.allclose((a * 2 - a).coefficients, a.coefficients)
    with pytest.raises(ValueError):
        a + ExteriorForm.zero(3, 2)
