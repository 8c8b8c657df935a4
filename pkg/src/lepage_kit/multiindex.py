"""Multi-indices over a fixed number of base directions.

A multi-index of length m records how many derivatives are taken in each of
the m base directions; entrywise arithmetic, factorials and weights are the
combinatorial backbone of every operator in the package.  Entry positions are
0-based internally while base directions are addressed 1-based (``count(i)``
is the number of copies of direction ``i``).
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Iterator, Optional

from .errors import DimensionError

__all__ = [
    "MultiIndex",
    "indices_of_degree",
    "indices_up_to_degree",
    "multinomial",
    "splittings",
    "weighted_binomial_check",
]


class MultiIndex(tuple):
    """An immutable vector of non-negative integers with entrywise arithmetic.

    Addition is entrywise (tuple concatenation is deliberately shadowed);
    subtraction is available only in checked form since negative entries are
    meaningless here.
    """

    __slots__ = ()

    def __new__(cls, entries):
        entries = tuple(int(e) for e in entries)
        if any(e < 0 for e in entries):
            raise DimensionError(f"multi-index entries must be non-negative: {entries}")
        return super().__new__(cls, entries)

    @classmethod
    def zero(cls, m: int) -> "MultiIndex":
        return cls((0,) * m)

    @classmethod
    def unit(cls, m: int, i: int) -> "MultiIndex":
        """The multi-index 1_i (single entry in direction i, 1-based)."""
        if not 1 <= i <= m:
            raise DimensionError(f"direction {i} out of range 1..{m}")
        return cls(tuple(1 if k == i - 1 else 0 for k in range(m)))

    @property
    def degree(self) -> int:
        """Total order |I|."""
        return sum(self)

    def count(self, i: int) -> int:
        """Number of copies of direction i (1-based)."""
        if not 1 <= i <= len(self):
            raise DimensionError(f"direction {i} out of range 1..{len(self)}")
        return self[i - 1]

    def factorial(self) -> int:
        """I! as a product of entry factorials."""
        out = 1
        for e in self:
            out *= math.factorial(e)
        return out

    def weight(self) -> int:
        """|I|!/I!, the number of orderings realizing this multi-index."""
        return math.factorial(self.degree) // self.factorial()

    def _check_len(self, other: "MultiIndex") -> None:
        if len(self) != len(other):
            raise DimensionError(
                f"multi-index length mismatch: {len(self)} vs {len(other)}"
            )

    def __add__(self, other) -> "MultiIndex":
        self._check_len(other)
        return MultiIndex(tuple(a + b for a, b in zip(self, other)))

    def checked_sub(self, other: "MultiIndex") -> Optional["MultiIndex"]:
        """Entrywise difference, or None if any entry would go negative."""
        self._check_len(other)
        diff = tuple(a - b for a, b in zip(self, other))
        if any(d < 0 for d in diff):
            return None
        return MultiIndex(diff)

    def plus_unit(self, i: int) -> "MultiIndex":
        return self + MultiIndex.unit(len(self), i)

    def supports(self) -> Iterator[int]:
        """Directions i (1-based) with a positive entry."""
        for k, e in enumerate(self):
            if e > 0:
                yield k + 1

    def to_index_list(self) -> tuple[int, ...]:
        """Sorted list of direction labels with multiplicity, e.g. (1,1,2)."""
        out = []
        for k, e in enumerate(self):
            out.extend([k + 1] * e)
        return tuple(out)

    @classmethod
    def from_index_list(cls, m: int, labels) -> "MultiIndex":
        counts = [0] * m
        for i in labels:
            if not 1 <= i <= m:
                raise DimensionError(f"direction {i} out of range 1..{m}")
            counts[i - 1] += 1
        return cls(counts)

    def __repr__(self) -> str:
        return f"MultiIndex({tuple(self)!r})"


def indices_of_degree(m: int, d: int) -> Iterator[MultiIndex]:
    """All multi-indices of length m with |I| = d, in lexicographic order."""
    if d < 0:
        return
    if m == 1:
        yield MultiIndex((d,))
        return
    for first in range(d, -1, -1):
        for rest in indices_of_degree(m - 1, d - first):
            yield MultiIndex((first,) + tuple(rest))


def indices_up_to_degree(m: int, d: int) -> Iterator[MultiIndex]:
    """All multi-indices of length m with |I| <= d, by increasing degree."""
    for k in range(d + 1):
        yield from indices_of_degree(m, k)


def splittings(I: MultiIndex) -> Iterator[tuple[MultiIndex, MultiIndex]]:
    """All ordered pairs (J, K) with J + K = I."""
    ranges = [range(e + 1) for e in I]
    for picks in itertools.product(*ranges):
        J = MultiIndex(picks)
        yield J, MultiIndex(tuple(a - b for a, b in zip(I, picks)))


def multinomial(I: MultiIndex, K: MultiIndex) -> int:
    """The binomial I!/(K!(I-K)!) for K <= I entrywise."""
    rest = I.checked_sub(K)
    if rest is None:
        raise DimensionError(f"{K} is not entrywise below {I}")
    return I.factorial() // (K.factorial() * rest.factorial())


def weighted_binomial_check(I: MultiIndex, p: int) -> tuple[Fraction, Fraction, bool]:
    """Evaluate both sides of the weighted binomial-sum identity.

    Returns (lhs, rhs, equal) where
    lhs = sum over 0 <= K <= I of (-1)^|K| I! / ((|K|+p+1) K! (I-K)!) and
    rhs = p! |I|! / (|I|+p+1)!.
    """
    if p < 0:
        raise DimensionError("p must be a non-negative integer")
    lhs = Fraction(0)
    for K, rest in splittings(I):
        term = Fraction(
            I.factorial(), (K.degree + p + 1) * K.factorial() * rest.factorial()
        )
        lhs += term if K.degree % 2 == 0 else -term
    rhs = Fraction(
        math.factorial(p) * math.factorial(I.degree),
        math.factorial(I.degree + p + 1),
    )
    return lhs, rhs, lhs == rhs
