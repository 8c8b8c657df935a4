from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from lepage_kit import DimensionError, MultiIndex, weighted_binomial_check
from lepage_kit.multiindex import (
    indices_of_degree,
    indices_up_to_degree,
    multinomial,
    splittings,
)


def mi(*entries):
    return MultiIndex(entries)


def test_sum_and_weight():
    assert mi(2, 1) + mi(0, 1) == mi(2, 2)
    assert mi(2, 1).weight() == 3  # 3!/2!


def test_checked_difference_absent_on_negative_entry():
    assert mi(1, 0).checked_sub(mi(0, 1)) is None
    assert mi(2, 1).checked_sub(mi(1, 1)) == mi(1, 0)


def test_factorial():
    assert mi(2, 2).factorial() == 4
    assert mi(0, 0).factorial() == 1
    assert mi(3, 1).factorial() == 6


def test_length_mismatch_raises():
    with pytest.raises(DimensionError):
        mi(1, 0) + MultiIndex((1,))


def test_negative_entries_rejected():
    with pytest.raises(DimensionError):
        MultiIndex((1, -1))


def test_unit_and_counts():
    e = MultiIndex.unit(3, 2)
    assert e == mi(0, 1, 0)
    assert e.count(2) == 1 and e.count(1) == 0
    assert mi(2, 0, 1).to_index_list() == (1, 1, 3)
    assert MultiIndex.from_index_list(3, (1, 1, 3)) == mi(2, 0, 1)


def test_indices_of_degree_counts():
    assert len(list(indices_of_degree(2, 3))) == 4
    assert len(list(indices_up_to_degree(3, 2))) == 10


@given(st.lists(st.integers(0, 3), min_size=1, max_size=3),
       st.lists(st.integers(0, 3), min_size=1, max_size=3))
def test_addition_commutes(a, b):
    if len(a) != len(b):
        return
    assert MultiIndex(a) + MultiIndex(b) == MultiIndex(b) + MultiIndex(a)


@given(st.lists(st.integers(0, 2), min_size=1, max_size=3))
def test_weight_counts_orderings(entries):
    if sum(entries) > 5:
        return
    I = MultiIndex(entries)
    # the weight counts the distinct orderings of the index word
    import itertools

    word = I.to_index_list()
    assert I.weight() == len(set(itertools.permutations(word)))


def test_splittings_partition():
    I = mi(2, 1)
    pairs = list(splittings(I))
    assert len(pairs) == 6
    assert all(J + K == I for J, K in pairs)


def test_multinomial_matches_enumeration():
    I, K = mi(3, 1), mi(2, 0)
    assert multinomial(I, K) == 3


def test_weighted_binomial_worked_value():
    lhs, rhs, equal = weighted_binomial_check(mi(2, 0), 1)
    assert equal
    assert lhs == Fraction(1, 12)
    # term-by-term enumeration oracle: 1/2 - 2/3 + 1/4
    assert Fraction(1, 2) - Fraction(2, 3) + Fraction(1, 4) == lhs


def test_weighted_binomial_zero_index():
    for p in range(4):
        lhs, rhs, equal = weighted_binomial_check(MultiIndex((0, 0)), p)
        assert equal and lhs == Fraction(1, p + 1)


def test_weighted_binomial_exhaustive_small():
    for m in (1, 2, 3):
        for I in indices_up_to_degree(m, 4):
            for p in range(4):
                _, _, equal = weighted_binomial_check(I, p)
                assert equal, (I, p)
