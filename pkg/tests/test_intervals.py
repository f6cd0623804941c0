"""
Tests for half-open interval sets inside [0, 1).
"""

from fractions import Fraction

import pytest

from intervals import IntervalError, IntervalSet, TooMuch, complement, intersect, measure, take_measure, union


def test_canonical_form():
    """Test overlapping and touching intervals merge; empty ones vanish."""
    s = IntervalSet([("1/2", "3/4"), (0, "1/4"), ("1/4", "1/3"), ("3/5", "7/10"), ("1/5", "1/5")])
    assert s.points == (0, Fraction(1, 3), Fraction(1, 2), Fraction(3, 4))
    assert s.measure == Fraction(7, 12)
    assert IntervalSet() == IntervalSet.empty()
    assert not IntervalSet.empty()


def test_rejects_intervals_outside_unit():
    """Test endpoints must satisfy 0 <= a <= b <= 1."""
    with pytest.raises(IntervalError):
        IntervalSet([(0, 2)])
    with pytest.raises(IntervalError):
        IntervalSet([("1/2", "1/4")])


def test_membership_is_half_open():
    """Test left endpoints belong to the set and right endpoints do not."""
    s = IntervalSet.span("1/4", "1/2")
    assert "1/4" in s
    assert Fraction(1, 2) not in s
    assert s.contains(Fraction(1, 3))


def test_boolean_operations():
    """Test intersection, union, difference and complement."""
    a = IntervalSet([(0, "1/2")])
    b = IntervalSet([("1/4", "3/4")])
    assert intersect(a, b) == IntervalSet.span("1/4", "1/2")
    assert union(a, b) == IntervalSet.span(0, "3/4")
    assert a - b == IntervalSet.span(0, "1/4")
    assert complement(a) == IntervalSet.span("1/2", 1)
    assert ~IntervalSet.universe() == IntervalSet.empty()
    assert ~IntervalSet.empty() == IntervalSet.universe()
    assert ~IntervalSet([("1/4", "1/2")]) == IntervalSet([(0, "1/4"), ("1/2", 1)])


def test_measure_identities():
    """Test inclusion-exclusion on a few sets."""
    a = IntervalSet([(0, "1/3"), ("1/2", "2/3")])
    b = IntervalSet([("1/4", "3/5"), ("9/10", 1)])
    assert measure(a | b) == measure(a) + measure(b) - measure(a & b)
    assert measure(~a) == 1 - measure(a)


def test_take_measure_is_leftmost():
    """Test take_measure walks the intervals from the left."""
    s = IntervalSet([("1/10", "2/10"), ("1/2", 1)])
    taken = take_measure(s, "1/5")
    assert taken == IntervalSet([("1/10", "2/10"), ("1/2", "6/10")])
    assert take_measure(s, 0) == IntervalSet.empty()
    assert take_measure(s, s.measure) == s
    with pytest.raises(TooMuch):
        take_measure(s, 1)
    with pytest.raises(IntervalError):
        take_measure(s, -1)


def test_text_form():
    """Test the "a b  c d" text form and its errors."""
    s = IntervalSet([(0, "1/4"), ("1/2", "3/4")])
    assert s.to_text() == "0 1/4  1/2 3/4"
    assert IntervalSet.from_text(s.to_text()) == s
    assert IntervalSet.from_text("") == IntervalSet.empty()
    with pytest.raises(IntervalError):
        IntervalSet.from_text("0 1/2 3/4")
    with pytest.raises(IntervalError):
        IntervalSet.from_text("0 x")


def test_immutable():
    """Test interval sets cannot be modified."""
    s = IntervalSet.universe()
    with pytest.raises(AttributeError):
        s.points = ()
    assert hash(s) == hash(IntervalSet.span(0, 1))
