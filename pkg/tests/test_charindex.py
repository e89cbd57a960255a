from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from spinbound.charindex import (
    DescriptorError, ManifoldDescriptor, ahat_class, ahat_degree, ahat_genus, ahat_series,
    c_nm, dirac_index, kervaire_sigma, multiplicativity_defect, parse_monomial, whitney_sum,
)


def test_series_coefficients():
    assert ahat_series(3) == [Fraction(1), Fraction(-1, 24), Fraction(7, 5760),
                              Fraction(-31, 967680)]


def test_low_degree_classes():
    A = ahat_class(8)
    assert A.component(0) == {(0, 0, 0, 0): 1}
    assert A.component(4) == {(1, 0, 0, 0): Fraction(-1, 24)}
    assert A.component(8) == {(2, 0, 0, 0): Fraction(7, 5760), (0, 1, 0, 0): Fraction(-4, 5760)}
    assert all(isinstance(c, Fraction) for c in A.component(8).values())


def test_degree_twelve_against_published_table():
    A = ahat_class(12).component(12)
    assert A == {(3, 0, 0, 0): Fraction(-31, 967680), (1, 1, 0, 0): Fraction(44, 967680),
                 (0, 0, 1, 0): Fraction(-16, 967680)}


def test_cap():
    with pytest.raises(ValueError):
        ahat_class(20)
    assert 16 in ahat_class(16).terms


def test_truncated_product():
    A = ahat_class(8)
    sq = A * A
    assert sq.component(4) == {(1, 0, 0, 0): Fraction(-1, 12)}
    assert max(sq.terms) <= 8


rationals = st.fractions(min_value=-20, max_value=20, max_denominator=30)
pvals = st.fixed_dictionaries({i: rationals for i in range(1, 5)})


@given(pvals, pvals)
def test_whitney_multiplicativity(pe, pf):
    assert multiplicativity_defect(pe, pf) == 0


def test_whitney_sum_of_line_bundles():
    # Two bundles with p1 = a, b only: p1 = a + b, p2 = ab.
    ps = whitney_sum({1: Fraction(3)}, {1: Fraction(5)})
    assert ps[1] == 8 and ps[2] == 15 and ps[3] == 0


def test_parse_monomial():
    assert parse_monomial("p1^2") == (2, 0, 0, 0)
    assert parse_monomial("p1*p2") == (1, 1, 0, 0)
    assert parse_monomial("p1 p3") == (1, 0, 1, 0)
    for bad in ("q1", "p5", "", "p1^"):
        with pytest.raises(DescriptorError):
            parse_monomial(bad)


def test_genus_examples():
    assert ahat_genus(ManifoldDescriptor(4, {"p1": -48})) == 2
    assert ahat_genus(ManifoldDescriptor(4, {"p1": 0})) == 0
    assert ahat_genus(ManifoldDescriptor(8, {"p1^2": 0, "p2": 0})) == 0
    assert ahat_genus(ManifoldDescriptor(6)) == 0


def test_genus_needs_numbers():
    with pytest.raises(DescriptorError):
        ahat_genus(ManifoldDescriptor(8, {"p2": 1}))
    with pytest.raises(DescriptorError):
        ManifoldDescriptor(8, {"p1": 1})


def test_quaternionic_plane_numbers():
    # HP^2: p1^2 = 4, p2 = 7 gives A-hat genus 0.
    assert ahat_genus(ManifoldDescriptor(8, {"p1^2": 4, "p2": 7})) == 0


def test_ahat_degree():
    M = ManifoldDescriptor(4, deg_f=3)
    assert ahat_degree(M, 4) == 3
    fiber = ManifoldDescriptor(4, {"p1": -48})
    assert ahat_degree(ManifoldDescriptor(8), 4, fiber) == 2
    assert ahat_degree(ManifoldDescriptor(8), 4, ManifoldDescriptor(4, {"p1": 0})) == 0
    with pytest.raises(DescriptorError):
        ahat_degree(M, 3)
    with pytest.raises(DescriptorError):
        ahat_degree(ManifoldDescriptor(8), 4)
    with pytest.raises(DescriptorError):
        ahat_degree(ManifoldDescriptor(4), 4)


def test_dirac_index():
    assert dirac_index(2, 3) == 6
    assert dirac_index(0, Fraction(7, 3)) == 0
    assert dirac_index(2, 2) == 4


def test_kervaire_sigma():
    assert kervaire_sigma(ManifoldDescriptor(5, betti=(1, 0, 0, 0, 0, 1))) == 1
    assert kervaire_sigma(ManifoldDescriptor(5, betti=(1, 0, 1, 1, 0, 1))) == 0
    assert kervaire_sigma(ManifoldDescriptor(7, betti=(1,) + (0,) * 6 + (1,))) == 0
    with pytest.raises(DescriptorError):
        kervaire_sigma(ManifoldDescriptor(5))
    with pytest.raises(DescriptorError):
        ManifoldDescriptor(5, betti=(1, 0, 1))


def test_c_nm():
    assert c_nm(3, 3) == Fraction(3, 2)
    assert c_nm(4, 3) == Fraction(7, 2)
    assert c_nm(2, 3) == 0
    assert all(c_nm(n, m) > 0 for n in range(3, 65) for m in range(3, 65))


def test_descriptor_from_dict():
    M = ManifoldDescriptor.from_dict({"dim": 4, "pontryagin": {"p1": -48}, "euler": 24,
                                      "betti": [1, 0, 22, 0, 1]})
    assert M.betti == (1, 0, 22, 0, 1) and ahat_genus(M) == 2
