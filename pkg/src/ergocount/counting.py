"""The counting function N_n(f)(x) for step functions along dyadic orbits.

N_n(f)(x) = #{k >= 1 : f(x + k*2^-J) / k > 1/n}, with the orbit taken mod 1
when the spec wraps.  For a step piece of value v the condition is k < n*v,
so the whole count is a sum of closed-form orbit-hit counts; nothing here
iterates over k except the brute-force oracle.

k starts at 1: including k = 0 would test f at x itself rather than along
the forward orbit, and every downstream bound is stated for forward hits.
n may be any positive rational, which covers the continuous-parameter
variant of the same supremum.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from gmpy2 import mpq, mpz

from .intervals import (
    CapacityError,
    Family,
    PeriodicIntervalSet,
    count_orbit_hits,
)
from .scalars import pow2, qceil, qfloor
from .stepfn import StepFunction


@dataclass(frozen=True)
class OrbitSpec:
    """Orbit x, x + 2^-J, x + 2*2^-J, ... on the line, or mod 1 if wrap."""
    J: int
    wrap: bool = False

    def __post_init__(self):
        if not (isinstance(self.J, int) and self.J >= 1):
            raise ValueError("J must be a positive integer")

    @property
    def step(self):
        return pow2(-self.J)


@dataclass(frozen=True)
class CountQuery:
    f: StepFunction
    orbit: OrbitSpec
    x: object  # ExactRational
    n: object  # positive rational (integer n is the classical case)

    def __post_init__(self):
        object.__setattr__(self, "x", mpq(self.x))
        object.__setattr__(self, "n", mpq(self.n))
        if self.n <= 0:
            raise ValueError("n must be positive")


def count_N(q: CountQuery) -> mpz:
    """Exact N_n(f)(x).  Per piece of value v, the hits are the orbit visits
    to the support with 1 <= k < n*v; the strict inequality makes the k-range
    [1, ceil(n*v)) for both integer and fractional n*v."""
    total = mpz(0)
    for v, s in q.f.pieces:
        k_hi = qceil(q.n * v)
        if k_hi <= 1:
            continue
        total += count_orbit_hits(s, q.orbit.J, q.x, 1, k_hi, q.orbit.wrap)
    return total


def ratio(q: CountQuery) -> mpq:
    """N_n(f)(x) / n, exactly."""
    return count_N(q) / q.n


def sup_ratio(f: StepFunction, orbit: OrbitSpec, x, ns):
    """Max of N_n(f)(x)/n over the finite sample ns.

    Returns (n_star, ratio_at_n_star), taking the first maximizer.  This is
    a certified lower bound for the supremum over all n, never the supremum
    itself.
    """
    ns = list(ns)
    if not ns:
        raise ValueError("ns must be nonempty")
    best_n = None
    best = None
    for n in ns:
        r = ratio(CountQuery(f, orbit, x, n))
        if best is None or r > best:
            best_n, best = n, r
    return best_n, best


def brute_force_N(q: CountQuery, k_cap=10_000_000) -> mpz:
    """Direct walk over k.  Test oracle only."""
    if q.f.is_zero:
        return mpz(0)
    k_hi = qceil(q.n * q.f.max_value)  # exclusive
    if k_hi - 1 > k_cap:
        raise CapacityError(
            "brute force would walk %s steps, cap is %s" % (k_hi - 1, k_cap))
    step = q.orbit.step
    y = mpq(q.x)
    if q.orbit.wrap:
        y = y - qfloor(y)
    total = mpz(0)
    for k in range(1, int(k_hi)):
        y += step
        if q.orbit.wrap and y >= 1:
            y -= 1
        # f(y)/k > 1/n  <=>  n*f(y) > k, all exact
        if q.n * q.f.value_at(y) > k:
            total += 1
    return total


# ---------------------------------------------------------------------------
# randomized oracle suite (also driven by the CLI)
# ---------------------------------------------------------------------------


def _random_family(rng, J, box_lo, box_exp):
    """A valid family inside [box_lo, box_lo + 2^-box_exp) with all periods
    dyadic (so both wrapped and unwrapped counting accept it)."""
    unit = pow2(-J)
    width_u = 1 << (J - box_exp)  # box width in grid units
    length_u = rng.randint(1, min(8, width_u))
    ext = length_u
    strides = []
    for _ in range(rng.randint(0, 2)):
        pe = 1
        while (1 << pe) < ext:
            pe += 1
        pe += rng.randint(0, 2)
        period_u = 1 << pe
        count = rng.randint(2, 3)
        if period_u * (count - 1) + ext > width_u:
            break
        strides.append((period_u, count))
        ext = period_u * (count - 1) + ext
    strides.reverse()
    lo_u = rng.randint(0, width_u - ext)
    lo = mpq(box_lo) + lo_u * unit
    if rng.random() < 0.25 and lo_u + ext < width_u:
        lo += unit / 3  # off-grid endpoints are legal; only periods are not
    return Family(lo, length_u * unit, [(p * unit, c) for p, c in strides])


def _random_case(rng):
    J = rng.randint(3, 20)
    wrap = rng.random() < 0.5
    # supports live in disjoint quarters of [0,1), so pieces never overlap
    quarters = rng.sample(range(4), k=rng.randint(1, 3))
    pieces = []
    for qtr in quarters:
        fam = _random_family(rng, J, mpq(qtr, 4), 2)
        if rng.random() < 0.5:
            value = pow2(rng.randint(-3, 12))
        else:
            value = mpq(rng.randint(1, 16), rng.randint(1, 7))
        pieces.append((value, PeriodicIntervalSet([fam])))
    f = StepFunction(pieces)
    if rng.random() < 0.8:
        x = mpq(rng.randrange(1 << J), 1 << J)
    else:
        x = mpq(rng.randrange(3 * (1 << J)), 3 * (1 << J))
    if not wrap:
        x += rng.randint(-1, 1)
    return f, OrbitSpec(J, wrap), x


def run_oracle_suite(seed=20260819, cases=1000, walk_budget=4_000_000):
    """cases random (f, orbit, x, n) queries with n*max(f) <= 10^6:
    count_N must equal brute_force_N on every one.

    Budgeted so the whole suite's brute-force walking stays bounded: most
    draws are short walks, a fixed slice stretches toward the 10^6 cap.
    Returns a report dict; deterministic for a given seed.
    """
    rng = random.Random(seed)
    mismatches = []
    walked = 0
    for i in range(cases):
        f, orbit, x = _random_case(rng)
        if i % 200 == 199:
            target = rng.randint(100_000, 1_000_000)
        elif i % 40 == 39:
            target = rng.randint(2_000, 20_000)
        else:
            target = rng.randint(1, 2_000)
        if walked + target > walk_budget:
            target = rng.randint(1, 500)
        n = max(1, qfloor(mpq(target) / f.max_value))
        if rng.random() < 0.15:
            n = mpq(n * 3, 2)  # exercise the rational-n variant
        q = CountQuery(f, orbit, x, n)
        fast = count_N(q)
        slow = brute_force_N(q)
        walked += int(qceil(q.n * f.max_value)) - 1
        if fast != slow:
            mismatches.append({
                "case": i,
                "J": orbit.J,
                "wrap": orbit.wrap,
                "x": str(q.x),
                "n": str(q.n),
                "count_N": str(fast),
                "brute_force_N": str(slow),
            })
    return {
        "cases": cases,
        "seed": seed,
        "walk_steps": walked,
        "mismatches": mismatches,
        "pass": not mismatches,
    }
