"""Nonnegative step functions with periodic-set supports.

A StepFunction is a finite map value -> support with positive rational
values and pairwise disjoint supports; it evaluates to 0 off all supports.
Disjointness is a construction invariant (the builders produce disjoint
sets by design); verify_disjoint_supports makes it checkable exactly when
a verification pass wants to pay for it.
"""

from __future__ import annotations

from gmpy2 import mpq, mpz

from .intervals import PeriodicIntervalSet, measure_intersection

ZERO = mpq(0)


class StepFunction:

    __slots__ = ("pieces",)

    def __init__(self, pieces=()):
        by_value = {}
        for value, support in pieces:
            value = mpq(value)
            if value <= 0:
                raise ValueError("step function values must be positive")
            if not isinstance(support, PeriodicIntervalSet):
                raise TypeError("support must be a PeriodicIntervalSet")
            if support.is_empty:
                continue
            if value in by_value:
                by_value[value] = by_value[value].union_families(support)
            else:
                by_value[value] = support
        self.pieces = tuple(sorted(by_value.items(), reverse=True))

    @staticmethod
    def zero():
        return StepFunction()

    @staticmethod
    def indicator(support, value=1):
        return StepFunction([(mpq(value), support)])

    @property
    def is_zero(self):
        return not self.pieces

    @property
    def max_value(self):
        return self.pieces[0][0] if self.pieces else ZERO

    @property
    def integral(self):
        return sum((v * s.measure for v, s in self.pieces), ZERO)

    @property
    def support_measure(self):
        return sum((s.measure for _, s in self.pieces), ZERO)

    def support(self) -> PeriodicIntervalSet:
        out = PeriodicIntervalSet.empty()
        for _, s in self.pieces:
            out = out.union_families(s)
        return out

    def value_at(self, y):
        y = mpq(y)
        for v, s in self.pieces:
            if s.contains(y):
                return v
        return ZERO

    def scale(self, c):
        """Pointwise multiple c*f, c > 0."""
        c = mpq(c)
        if c <= 0:
            raise ValueError("scale factor must be positive")
        return StepFunction([(v * c, s) for v, s in self.pieces])

    def add_disjoint(self, other) -> "StepFunction":
        """Sum of functions whose supports do not meet (so values never
        stack); equal values merge into one piece."""
        return StepFunction(self.pieces + other.pieces)

    def translate(self, dx):
        dx = mpq(dx)
        return StepFunction([(v, s.translate(dx)) for v, s in self.pieces])

    def verify_disjoint_supports(self) -> bool:
        """Exact pairwise check across every family of every piece."""
        fams = [f for _, s in self.pieces for f in s.families]
        for i in range(len(fams)):
            for j in range(i + 1, len(fams)):
                if measure_intersection(fams[i], fams[j]) != 0:
                    return False
        return True

    @property
    def n_pieces(self):
        return len(self.pieces)

    @property
    def n_families(self):
        return sum(len(s.families) for _, s in self.pieces)

    @property
    def n_components(self) -> mpz:
        return sum((s.n_components for _, s in self.pieces), mpz(0))

    def is_grid_aligned(self, J) -> bool:
        return all(s.is_grid_aligned(J) for _, s in self.pieces)

    def __eq__(self, other):
        return isinstance(other, StepFunction) and self.pieces == other.pieces

    def __hash__(self):
        return hash(self.pieces)

    def __repr__(self):
        return "StepFunction(%d pieces, integral=%s)" % (
            len(self.pieces), self.integral)
