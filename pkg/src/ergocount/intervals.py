"""Periodic interval sets and the exact measure / orbit-counting kernels.

The carrier type is a *nested* periodic family: a base interval of a given
length replicated along a chain of strides (period, count), outermost first.
A family with stride chain (P_1,c_1),...,(P_d,c_d) and base length L denotes

    union over 0 <= j_i < c_i of  [lo + sum_i j_i P_i,  lo + sum_i j_i P_i + L)

subject to the chain invariants below, which force all copies to be disjoint
and ordered.  Flat families (d <= 1) are the classical arithmetic-progression
case; the nesting is what keeps the block-cascade constructions polynomial
size, since their components multiply across scales.

Membership, exact Lebesgue measure of intersections, and exact orbit-hit
counts all reduce to one recursion over residue conditions ("arc systems"),
so nothing here ever enumerates components unless a caller explicitly asks
for them under a budget.
"""

from __future__ import annotations

import itertools
from collections import namedtuple

from gmpy2 import mpq, mpz

from .scalars import pow2, qceil, qfloor

ZERO = mpq(0)


class FamilyInvariantError(ValueError):
    """The (lo, length, strides) data violate the nesting invariants."""


class GridCompatibilityError(ValueError):
    """A period is not commensurate with the requested grid or chain."""


class CapacityError(RuntimeError):
    """An operation would enumerate more components than its budget allows."""


Stride = namedtuple("Stride", ["period", "count"])


def _mod(w, p):
    """w mod p for rationals, result in [0, p)."""
    return w - p * qfloor(w / p)


class Family:
    """One nested periodic family of half-open intervals."""

    __slots__ = ("lo", "length", "strides", "_extent")

    def __init__(self, lo, length, strides=()):
        self.lo = mpq(lo)
        self.length = mpq(length)
        if self.length <= 0:
            raise FamilyInvariantError("length must be positive")
        cleaned = []
        for period, count in strides:
            period = mpq(period)
            count = mpz(count)
            if period <= 0:
                raise FamilyInvariantError("stride period must be positive")
            if count < 1:
                raise FamilyInvariantError("stride count must be >= 1")
            if count == 1:
                continue  # a single copy adds nothing; canonical form drops it
            cleaned.append(Stride(period, count))
        self.strides = tuple(cleaned)
        # nesting: the extent of everything inside a stride must fit in one
        # period of the stride outside it, and consecutive periods must divide
        ext = self.length
        for period, count in reversed(self.strides):
            if ext > period:
                raise FamilyInvariantError(
                    "inner extent %s exceeds stride period %s" % (ext, period))
            ext = period * (count - 1) + ext
        for outer, inner in zip(self.strides, self.strides[1:]):
            if (outer.period / inner.period).denominator != 1:
                raise GridCompatibilityError(
                    "stride periods must form a divisibility chain")
        self._extent = ext

    # -- basic geometry ----------------------------------------------------

    @property
    def extent(self):
        return self._extent

    @property
    def hi(self):
        """Supremum of the family (lo + extent)."""
        return self.lo + self._extent

    @property
    def n_components(self) -> mpz:
        n = mpz(1)
        for _, count in self.strides:
            n *= count
        return n

    @property
    def measure(self):
        return self.length * self.n_components

    def contains(self, y) -> bool:
        w = mpq(y) - self.lo
        if w < 0:
            return False
        if not self.strides:
            return w < self.length
        p1, c1 = self.strides[0]
        if w >= p1 * c1:
            return False
        d = len(self.strides)
        for i, (p, _) in enumerate(self.strides):
            if i + 1 < d:
                theta = self.strides[i + 1].period * self.strides[i + 1].count
            else:
                theta = self.length
            if _mod(w, p) >= theta:
                return False
        return True

    def component_lo(self, jvec):
        if len(jvec) != len(self.strides):
            raise ValueError("index vector length mismatch")
        lo = self.lo
        for j, (p, c) in zip(jvec, self.strides):
            if not 0 <= j < c:
                raise ValueError("component index out of range")
            lo = lo + p * mpz(j)
        return lo

    def components(self, cap=65536):
        """Yield (lo, hi) per component, left to right per stride order."""
        if self.n_components > cap:
            raise CapacityError(
                "family has %s components, cap is %s" % (self.n_components, cap))
        ranges = [range(int(c)) for _, c in self.strides]
        for jvec in itertools.product(*ranges):
            lo = self.component_lo(jvec)
            yield lo, lo + self.length

    def random_component_lo(self, rng):
        jvec = tuple(rng.randrange(int(c)) for _, c in self.strides)
        return self.component_lo(jvec)

    def iter_component_los(self, limit):
        """First `limit` component left endpoints in lexicographic stride
        order, without ever materializing the full product."""
        ranges = [range(int(min(c, limit))) for _, c in self.strides]
        for jvec in itertools.islice(itertools.product(*ranges), limit):
            yield self.component_lo(jvec)

    # -- structural surgery --------------------------------------------------

    def translate(self, dx):
        return Family(self.lo + mpq(dx), self.length, self.strides)

    def scale_length(self, rho):
        """Keep the left rho-fraction of every component."""
        rho = mpq(rho)
        if not 0 < rho <= 1:
            raise ValueError("rho must be in (0, 1]")
        if rho == 1:
            return self
        return Family(self.lo, self.length * rho, self.strides)

    def scale_length_remainder(self, rho):
        """The right (1-rho)-fraction of every component."""
        rho = mpq(rho)
        if not 0 < rho < 1:
            raise ValueError("rho must be in (0, 1)")
        return Family(self.lo + self.length * rho,
                      self.length * (1 - rho), self.strides)

    def with_count(self, level, new_count):
        """Keep the first new_count copies at the given stride level."""
        new_count = mpz(new_count)
        p, c = self.strides[level]
        if not 1 <= new_count <= c:
            raise ValueError("new count out of range")
        strides = list(self.strides)
        strides[level] = Stride(p, new_count)
        return Family(self.lo, self.length, strides)

    def count_remainder(self, level, kept):
        """The copies dropped by with_count(level, kept), as a family."""
        kept = mpz(kept)
        p, c = self.strides[level]
        if not 1 <= kept < c:
            raise ValueError("kept count out of range")
        strides = list(self.strides)
        strides[level] = Stride(p, c - kept)
        return Family(self.lo + p * kept, self.length, strides)

    def is_grid_aligned(self, J) -> bool:
        """All endpoints and periods are multiples of 2**-J."""
        scale = pow2(-int(J))
        vals = [self.lo, self.length] + [p for p, _ in self.strides]
        return all((v / scale).denominator == 1 for v in vals)

    # -- residue conditions ---------------------------------------------------

    def conditions(self):
        """(window, levels) equivalent to membership.

        window is a half-open (W0, W1); levels is a list of (period, arcs)
        with arcs half-open subintervals of [0, period], and y is in the
        family iff y is in the window and y mod period lies in the arc union
        at every level.  Equivalence with the greedy component descent relies
        on the divisibility chain.
        """
        if not self.strides:
            return (self.lo, self.lo + self.length), []
        p1, c1 = self.strides[0]
        window = (self.lo, self.lo + p1 * c1)
        levels = []
        d = len(self.strides)
        for i, (p, _) in enumerate(self.strides):
            if i + 1 < d:
                theta = self.strides[i + 1].period * self.strides[i + 1].count
            else:
                theta = self.length
            if theta >= p:
                continue  # condition is vacuous at this level
            r = _mod(self.lo, p)
            if r + theta <= p:
                arcs = ((r, r + theta),)
            else:
                arcs = ((ZERO, r + theta - p), (r, p))
            levels.append((p, arcs))
        return window, levels

    # -- dunder ---------------------------------------------------------------

    def _key(self):
        return (self.lo, self.length, self.strides)

    def __eq__(self, other):
        return isinstance(other, Family) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return "Family(lo=%s, length=%s, strides=%r)" % (
            self.lo, self.length,
            [(str(p), str(c)) for p, c in self.strides])


def interval(lo, hi) -> Family:
    """Plain interval [lo, hi) as a strideless family."""
    lo = mpq(lo)
    hi = mpq(hi)
    if hi <= lo:
        raise ValueError("empty interval")
    return Family(lo, hi - lo)


class GridInterval:
    """[j*2^-R, (j+1)*2^-R): the dyadic building block all constructions
    start from."""

    __slots__ = ("j", "R")

    def __init__(self, j, R):
        self.j = mpz(j)
        self.R = int(R)
        if self.R < 0:
            raise ValueError("resolution must be nonnegative")

    @property
    def lo(self):
        return self.j * pow2(-self.R)

    @property
    def hi(self):
        return (self.j + 1) * pow2(-self.R)

    @property
    def length(self):
        return pow2(-self.R)

    def as_family(self) -> Family:
        return interval(self.lo, self.hi)

    def as_set(self) -> "PeriodicIntervalSet":
        return PeriodicIntervalSet([self.as_family()])

    def __eq__(self, other):
        return (isinstance(other, GridInterval)
                and self.j == other.j and self.R == other.R)

    def __hash__(self):
        return hash((self.j, self.R))

    def __repr__(self):
        return "GridInterval(j=%s, R=%d)" % (self.j, self.R)


def replicate(region: Family, cell, inner: Family) -> Family:
    """Copy `inner`, defined inside [0, cell), into every cell of `region`.

    Every component of region must consist of whole cells and start on the
    cell grid; inner must fit in one cell.  The result is one family whose
    stride chain is region's chain, then the cell stride, then inner's chain.
    """
    cell = mpq(cell)
    ncells_q = region.length / cell
    if ncells_q.denominator != 1:
        raise GridCompatibilityError("region components are not whole cells")
    if (region.lo / cell).denominator != 1:
        raise GridCompatibilityError("region is not on the cell grid")
    if inner.lo < 0 or inner.hi > cell:
        raise FamilyInvariantError("inner family does not fit in one cell")
    ncells = ncells_q.numerator
    strides = region.strides + ((Stride(cell, ncells),) if ncells > 1 else ())
    return Family(region.lo + inner.lo, inner.length, strides + inner.strides)


# ---------------------------------------------------------------------------
# arc systems: conjunction of residue conditions, shared by measure and count
# ---------------------------------------------------------------------------


def _intersect_arc_lists(xs, ys):
    out = []
    for a, b in xs:
        for c, d in ys:
            lo, hi = max(a, c), min(b, d)
            if hi > lo:
                out.append((lo, hi))
    out.sort()
    return tuple(out)


def merge_conditions(conds):
    """Intersect condition systems.

    conds: iterable of (window, levels) pairs as produced by
    Family.conditions().  Returns (window, levels) with one entry per
    distinct period, periods strictly decreasing and forming a divisibility
    chain, or None if the intersection is trivially empty.
    """
    W0 = None
    W1 = None
    by_period = {}
    for window, levels in conds:
        W0 = window[0] if W0 is None else max(W0, window[0])
        W1 = window[1] if W1 is None else min(W1, window[1])
        for p, arcs in levels:
            if p in by_period:
                by_period[p] = _intersect_arc_lists(by_period[p], arcs)
            else:
                by_period[p] = tuple(sorted(arcs))
            if not by_period[p]:
                return None
    if W0 is None or W1 <= W0:
        return None
    periods = sorted(by_period, reverse=True)
    for outer, inner in zip(periods, periods[1:]):
        if (outer / inner).denominator != 1:
            raise GridCompatibilityError(
                "mixed periods %s, %s do not chain" % (outer, inner))
    return (W0, W1), [(p, by_period[p]) for p in periods]


def _measure_arcs(window, levels):
    """Exact measure of {y in window: all residue conditions hold}.

    Works through the prefix function F(i, t) = measure of [0, t) under the
    conditions at levels i and deeper.  Each evaluation descends the level
    chain once; per-arc and per-period totals are memoized, so the cost is
    polynomial in depth and arc count regardless of window size.
    """
    W0, W1 = window
    if W1 <= W0:
        return ZERO
    if not levels:
        return W1 - W0
    p1 = levels[0][0]
    shift = qfloor(W0 / p1) * p1  # conditions are p1-periodic; keep t >= 0
    W0 -= shift
    W1 -= shift
    d = len(levels)
    static = {}
    per = {}

    def F(i, t):
        if t <= 0:
            return ZERO
        if i == d:
            return t
        p, arcs = levels[i]
        q = qfloor(t / p)
        r = t - p * q
        total = q * fper(i)
        for j, (a, b) in enumerate(arcs):
            if b <= r:
                total += farc(i, j)
            elif a < r:
                total += F(i + 1, r) - fstart(i, j)
                break
            else:
                break
        return total

    def fstart(i, j):
        key = (i, j, 0)
        if key not in static:
            static[key] = F(i + 1, levels[i][1][j][0])
        return static[key]

    def farc(i, j):
        key = (i, j, 1)
        if key not in static:
            static[key] = F(i + 1, levels[i][1][j][1]) - fstart(i, j)
        return static[key]

    def fper(i):
        if i not in per:
            per[i] = sum(farc(i, j) for j in range(len(levels[i][1])))
        return per[i]

    return F(0, W1) - F(0, W0)


def _count_arcs_int(s0, s1, levels):
    """#{integer s in [s0, s1): s mod m in arcs at every level}.

    levels: list of (m, arcs) with m a positive integer, arcs disjoint
    sorted integer half-open intervals inside [0, m], moduli strictly
    decreasing and chained by divisibility.  Same prefix-function scheme
    as _measure_arcs, on integers.
    """
    s0 = mpz(s0)
    s1 = mpz(s1)
    if s1 <= s0:
        return mpz(0)
    if not levels:
        return s1 - s0
    m1 = levels[0][0]
    shift = (s0 // m1) * m1
    s0 -= shift
    s1 -= shift
    d = len(levels)
    static = {}
    per = {}

    def F(i, t):
        if t <= 0:
            return mpz(0)
        if i == d:
            return t
        m, arcs = levels[i]
        q, r = divmod(t, m)
        total = q * fper(i)
        for j, (a, b) in enumerate(arcs):
            if b <= r:
                total += farc(i, j)
            elif a < r:
                total += F(i + 1, r) - fstart(i, j)
                break
            else:
                break
        return total

    def fstart(i, j):
        key = (i, j, 0)
        if key not in static:
            static[key] = F(i + 1, levels[i][1][j][0])
        return static[key]

    def farc(i, j):
        key = (i, j, 1)
        if key not in static:
            static[key] = F(i + 1, levels[i][1][j][1]) - fstart(i, j)
        return static[key]

    def fper(i):
        if i not in per:
            per[i] = sum(farc(i, j) for j in range(len(levels[i][1])))
        return per[i]

    return F(0, s1) - F(0, s0)


def _integerize(window, levels, x, J):
    """Convert rational conditions on y = x + k*2^-J to integer conditions
    on s = floor(x*2^J) + k.  Returns (Z, s_window, int_levels) or None if
    some level's arcs convert to nothing."""
    scale = mpz(1) << int(J)  # work with y*2^J to avoid rational division
    xs = mpq(x) * scale
    Z = qfloor(xs)
    zeta = xs - Z
    ilevels = []
    for p, arcs in levels:
        mq = p * scale
        if mq.denominator != 1:
            raise GridCompatibilityError(
                "period %s is not a multiple of 2^-%d" % (p, J))
        m = mq.numerator
        iarcs = []
        for a, b in arcs:
            ia = qceil(a * scale - zeta)
            ib = qceil(b * scale - zeta)
            if ib > ia:
                iarcs.append((ia, ib))
        if not iarcs:
            return None
        ilevels.append((m, tuple(iarcs)))
    W0, W1 = window
    s0 = qceil(W0 * scale - zeta)
    s1 = qceil(W1 * scale - zeta)
    return Z, (s0, s1), ilevels


def _count_family_line(fam: Family, J, x, k_lo, k_hi) -> mpz:
    """#{k in [k_lo, k_hi): x + k*2^-J in fam}, no wrap-around."""
    if k_hi <= k_lo:
        return mpz(0)
    window, levels = fam.conditions()
    got = _integerize(window, levels, x, J)
    if got is None:
        return mpz(0)
    Z, (s0, s1), ilevels = got
    s0 = max(s0, Z + mpz(k_lo))
    s1 = min(s1, Z + mpz(k_hi))
    if s1 <= s0:
        return mpz(0)
    return _count_arcs_int(s0, s1, ilevels)


def _count_family_wrapped(fam: Family, J, x, k_lo, k_hi) -> mpz:
    """Same, for the rotation (x + k*2^-J) mod 1; fam must lie in [0, 1)."""
    if fam.lo < 0 or fam.hi > 1:
        raise GridCompatibilityError("wrapped counting needs sets inside [0,1)")
    for p, _ in fam.strides:
        if (1 / p).denominator != 1:
            raise GridCompatibilityError(
                "wrapped counting needs periods dividing 1, got %s" % p)
    k_lo = mpz(k_lo)
    k_hi = mpz(k_hi)
    if k_hi <= k_lo:
        return mpz(0)
    x = _mod(mpq(x), mpq(1))
    kper = mpz(1) << int(J)
    delta = pow2(-int(J))

    def span_count(a, b):
        # orbit over [a, b) sweeps y in [x + a*delta, x + b*delta); membership
        # of y mod 1 equals membership of y in an integer translate of fam
        total = mpz(0)
        t0 = qfloor(x + a * delta)
        t1 = qfloor(x + (b - 1) * delta)
        t = t0
        while t <= t1:
            total += _count_family_line(fam.translate(t), J, x, a, b)
            t += 1
        return total

    n = k_hi - k_lo
    q, r = divmod(n, kper)
    total = mpz(0)
    if q:
        total += q * span_count(k_lo, k_lo + kper)
    if r:
        total += span_count(k_lo + q * kper, k_hi)
    return total


# ---------------------------------------------------------------------------
# the public set type
# ---------------------------------------------------------------------------


class PeriodicIntervalSet:
    """A finite union of families.  Families are expected to be pairwise
    disjoint (construction code guarantees it; set_union checks it)."""

    __slots__ = ("families",)

    def __init__(self, families=()):
        fams = []
        for f in families:
            if not isinstance(f, Family):
                raise TypeError("expected Family, got %r" % type(f))
            fams.append(f)
        self.families = tuple(fams)

    @staticmethod
    def from_interval(lo, hi):
        return PeriodicIntervalSet([interval(lo, hi)])

    @staticmethod
    def empty():
        return PeriodicIntervalSet([])

    @property
    def is_empty(self):
        return not self.families

    @property
    def measure(self):
        return sum((f.measure for f in self.families), ZERO)

    def contains(self, y) -> bool:
        y = mpq(y)
        return any(f.contains(y) for f in self.families)

    def translate(self, dx):
        dx = mpq(dx)
        return PeriodicIntervalSet([f.translate(dx) for f in self.families])

    @property
    def n_components(self) -> mpz:
        return sum((f.n_components for f in self.families), mpz(0))

    def components(self, cap=65536):
        if self.n_components > cap:
            raise CapacityError("set has %s components" % self.n_components)
        out = []
        for f in self.families:
            out.extend(f.components(cap))
        out.sort()
        return out

    def bounds(self):
        if self.is_empty:
            return None
        return (min(f.lo for f in self.families),
                max(f.hi for f in self.families))

    def is_grid_aligned(self, J) -> bool:
        return all(f.is_grid_aligned(J) for f in self.families)

    def union_families(self, other):
        """Plain concatenation; caller asserts disjointness."""
        return PeriodicIntervalSet(self.families + other.families)

    def __eq__(self, other):
        return (isinstance(other, PeriodicIntervalSet)
                and self.families == other.families)

    def __hash__(self):
        return hash(self.families)

    def __repr__(self):
        return "PeriodicIntervalSet(%d families, measure=%s)" % (
            len(self.families), self.measure)


def measure(s: PeriodicIntervalSet):
    """Exact Lebesgue measure, additive over the disjoint families."""
    return s.measure


def measure_intersection(a, b):
    """Exact measure of the intersection of two sets (each internally
    disjoint), via the shared residue-condition kernel.  Never enumerates
    components."""
    fams_a = a.families if isinstance(a, PeriodicIntervalSet) else (a,)
    fams_b = b.families if isinstance(b, PeriodicIntervalSet) else (b,)
    total = ZERO
    for fa in fams_a:
        ca = fa.conditions()
        for fb in fams_b:
            merged = merge_conditions([ca, fb.conditions()])
            if merged is None:
                continue
            window, levels = merged
            total += _measure_arcs(window, levels)
    return total


def sets_disjoint(a, b) -> bool:
    return measure_intersection(a, b) == 0


def count_orbit_hits(s, J, x, k_lo, k_hi, wrap=False) -> mpz:
    """Exact #{k in [k_lo, k_hi): x + k*2^-J (mod 1 if wrap) lies in s}.

    Closed form: polynomial in the number of families and stride depth,
    independent of k_hi - k_lo.  Every family period must be a multiple of
    2^-J (and divide 1 when wrap is set); violations raise
    GridCompatibilityError rather than rounding.
    """
    fams = s.families if isinstance(s, PeriodicIntervalSet) else (s,)
    J = int(J)
    total = mpz(0)
    for fam in fams:
        if wrap:
            total += _count_family_wrapped(fam, J, x, k_lo, k_hi)
        else:
            total += _count_family_line(fam, J, x, k_lo, k_hi)
    return total


def scale_components(s, rho):
    """Keep the left rho-fraction of every maximal component.

    Exact: measure(result) = rho * measure(s), and the result is contained
    in s.  Families must individually have components equal to the maximal
    components of s (true for all constructed sets, whose families are
    separated); rho = 1 returns s unchanged.
    """
    rho = mpq(rho)
    if not 0 < rho <= 1:
        raise ValueError("rho must be in (0, 1]")
    if isinstance(s, Family):
        return s.scale_length(rho)
    return PeriodicIntervalSet([f.scale_length(rho) for f in s.families])


def scale_components_remainder(s, rho):
    rho = mpq(rho)
    if isinstance(s, Family):
        return s.scale_length_remainder(rho)
    return PeriodicIntervalSet(
        [f.scale_length_remainder(rho) for f in s.families])


# ---------------------------------------------------------------------------
# budgeted generic set algebra (component enumeration under a cap)
# ---------------------------------------------------------------------------


def _merge_sorted_intervals(ivs):
    out = []
    for lo, hi in ivs:
        if out and lo <= out[-1][1]:
            if hi > out[-1][1]:
                out[-1] = (out[-1][0], hi)
        else:
            out.append((lo, hi))
    return out


def set_union(a, b, budget=65536):
    """Union of two sets.

    Disjoint inputs concatenate without any enumeration.  Overlapping inputs
    fall back to component enumeration under the budget; beyond it the caller
    must refine by hand (CapacityError), never a silent approximation.
    """
    if a.is_empty:
        return b
    if b.is_empty:
        return a
    if sets_disjoint(a, b):
        return a.union_families(b)
    comps = _merge_sorted_intervals(
        sorted(a.components(budget) + b.components(budget)))
    return PeriodicIntervalSet([interval(lo, hi) for lo, hi in comps])


def set_intersection(a, b, budget=65536):
    """Pointwise intersection as a set, by budgeted enumeration.  For exact
    scalable intersection *measure*, use measure_intersection."""
    out = []
    if a.is_empty or b.is_empty:
        return PeriodicIntervalSet.empty()
    bcomps = b.components(budget)
    for alo, ahi in a.components(budget):
        for blo, bhi in bcomps:
            lo, hi = max(alo, blo), min(ahi, bhi)
            if hi > lo:
                out.append((lo, hi))
    return PeriodicIntervalSet(
        [interval(lo, hi) for lo, hi in _merge_sorted_intervals(sorted(out))])


def set_complement(s, ambient_lo, ambient_hi, budget=65536):
    """Complement within [ambient_lo, ambient_hi), budgeted."""
    ambient_lo = mpq(ambient_lo)
    ambient_hi = mpq(ambient_hi)
    cur = ambient_lo
    out = []
    for lo, hi in _merge_sorted_intervals(
            sorted(s.components(budget))) if not s.is_empty else []:
        lo = max(lo, ambient_lo)
        hi = min(hi, ambient_hi)
        if hi <= lo:
            continue
        if lo > cur:
            out.append((cur, lo))
        cur = max(cur, hi)
    if cur < ambient_hi:
        out.append((cur, ambient_hi))
    return PeriodicIntervalSet([interval(lo, hi) for lo, hi in out])


# ---------------------------------------------------------------------------
# sampling helpers (verification only; all randomness is caller-seeded)
# ---------------------------------------------------------------------------


def grid_points_in_component(comp_lo, comp_hi, J):
    """Number of 2^-J grid points in [comp_lo, comp_hi) and the first one."""
    scale = mpz(1) << int(J)
    first = qceil(comp_lo * scale)
    last = qceil(comp_hi * scale)  # exclusive
    return last - first, first


def random_grid_point(fam: Family, J, rng):
    """A uniformly chosen 2^-J grid point inside a random component."""
    comp_lo = fam.random_component_lo(rng)
    n, first = grid_points_in_component(comp_lo, comp_lo + fam.length, J)
    if n <= 0:
        raise ValueError("component holds no grid point at resolution %s" % J)
    idx = rng.randrange(int(n))
    return mpq(first + idx, mpz(1) << int(J))
