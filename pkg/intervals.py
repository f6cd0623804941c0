"""
Finite unions of half-open intervals inside U = [0, 1).

An IntervalSet stores its boundary points a_1 < b_1 < a_2 < ... < b_k, so
the set is [a_1, b_1) u ... u [a_k, b_k). Boolean operations sweep the
merged boundary points of both operands, which keeps every result in
canonical form (maximal, sorted, nonempty intervals).
"""

import logging
from fractions import Fraction
from typing import Callable, Iterable, Iterator, List, Sequence, Tuple

from utils import format_rational, parse_rational

logger = logging.getLogger(__name__)

ZERO = Fraction(0)
ONE = Fraction(1)


class IntervalError(Exception):
    """Base exception for interval set errors."""

    pass


class TooMuch(IntervalError):
    """Requested more measure than the set holds."""


class IntervalSet:
    """
    An immutable finite union of half-open intervals inside [0, 1).

    Attributes:
        points (tuple): Strictly increasing boundary points, even length.
    """

    __slots__ = ("points",)

    def __init__(self, intervals: Iterable[Tuple[object, object]] = ()):
        spans = []
        for a, b in intervals:
            a, b = Fraction(a), Fraction(b)
            if not ZERO <= a <= b <= ONE:
                raise IntervalError(f"[{format_rational(a)}, {format_rational(b)}) is not inside [0, 1)")
            if a < b:
                spans.append((a, b))
        spans.sort()
        points: List[Fraction] = []
        for a, b in spans:
            if points and a <= points[-1]:
                if b > points[-1]:
                    points[-1] = b
                continue
            points.extend((a, b))
        object.__setattr__(self, "points", tuple(points))

    def __setattr__(self, name, value):
        raise AttributeError("IntervalSet is immutable")

    @classmethod
    def _from_points(cls, points: Sequence[Fraction]) -> "IntervalSet":
        result = cls.__new__(cls)
        object.__setattr__(result, "points", tuple(points))
        return result

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls._from_points(())

    @classmethod
    def universe(cls) -> "IntervalSet":
        return cls._from_points((ZERO, ONE))

    @classmethod
    def span(cls, a: object, b: object) -> "IntervalSet":
        return cls([(a, b)])

    def intervals(self) -> Iterator[Tuple[Fraction, Fraction]]:
        p = self.points
        for k in range(0, len(p), 2):
            yield p[k], p[k + 1]

    @property
    def measure(self) -> Fraction:
        p = self.points
        return sum((p[k + 1] - p[k] for k in range(0, len(p), 2)), ZERO)

    def __bool__(self) -> bool:
        return bool(self.points)

    def __eq__(self, other) -> bool:
        return isinstance(other, IntervalSet) and self.points == other.points

    def __hash__(self) -> int:
        return hash(self.points)

    def __repr__(self) -> str:
        return f"IntervalSet({self.to_text() or 'empty'})"

    def contains(self, t: object) -> bool:
        t = Fraction(t)
        return any(a <= t < b for a, b in self.intervals())

    __contains__ = contains

    def _combine(self, other: "IntervalSet", rule: Callable[[bool, bool], bool]) -> "IntervalSet":
        cuts = sorted(set(self.points) | set(other.points) | {ZERO, ONE})
        points: List[Fraction] = []
        inside = False
        for left, right in zip(cuts, cuts[1:]):
            now = rule(self.contains(left), other.contains(left))
            if now != inside:
                points.append(left)
                inside = now
        if inside:
            points.append(ONE)
        return IntervalSet._from_points(points)

    def __and__(self, other: "IntervalSet") -> "IntervalSet":
        return self._combine(other, lambda a, b: a and b)

    def __or__(self, other: "IntervalSet") -> "IntervalSet":
        return self._combine(other, lambda a, b: a or b)

    def __sub__(self, other: "IntervalSet") -> "IntervalSet":
        return self._combine(other, lambda a, b: a and not b)

    def __invert__(self) -> "IntervalSet":
        p = self.points
        if p and p[0] == ZERO:
            points = list(p[1:])
        else:
            points = [ZERO] + list(p)
        if points and points[-1] == ONE:
            points.pop()
        else:
            points.append(ONE)
        return IntervalSet._from_points(points)

    def take_measure(self, amount: object) -> "IntervalSet":
        """
        The leftmost part of the set with exactly the requested measure.

        Raises:
            TooMuch: If amount exceeds the measure of the set.
        """
        amount = Fraction(amount)
        if amount < 0:
            raise IntervalError(f"Cannot take a negative measure {format_rational(amount)}")
        if amount > self.measure:
            raise TooMuch(f"Requested {format_rational(amount)} from a set of measure {format_rational(self.measure)}")
        taken = []
        left = amount
        for a, b in self.intervals():
            if not left:
                break
            length = min(b - a, left)
            taken.append((a, a + length))
            left -= length
        return IntervalSet(taken)

    def to_text(self) -> str:
        """Space separated "a b" pairs, one per interval."""
        return "  ".join(f"{format_rational(a)} {format_rational(b)}" for a, b in self.intervals())

    @classmethod
    def from_text(cls, text: str) -> "IntervalSet":
        tokens = text.split()
        if len(tokens) % 2:
            raise IntervalError(f"Odd number of endpoints in {text!r}")
        try:
            values = [parse_rational(t) for t in tokens]
        except ValueError as e:
            raise IntervalError(f"Bad endpoint in {text!r}") from e
        return cls(zip(values[0::2], values[1::2]))


def measure(s: IntervalSet) -> Fraction:
    return s.measure


def intersect(s: IntervalSet, t: IntervalSet) -> IntervalSet:
    return s & t


def union(s: IntervalSet, t: IntervalSet) -> IntervalSet:
    return s | t


def complement(s: IntervalSet) -> IntervalSet:
    return ~s


def take_measure(s: IntervalSet, amount: object) -> IntervalSet:
    return s.take_measure(amount)
