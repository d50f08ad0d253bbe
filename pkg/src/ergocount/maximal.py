"""Continuous one-sided analogs of the orbit-counting supremum.

The counting operator asks how often f(x + k 2^-J)/k clears 1/n along a
grid orbit.  Its measure-theoretic shadow replaces the orbit sweep with a
Lebesgue average over a left window:

    A f(x) = sup_{lam > 0} lam * m{ 0 < y < x : f(x - y) / y > lam }

For a step function f = sum_v v 1_{S_v} the measure term is

    m(lam) = sum_v m( S_v  intersect  (x - min(x, v/lam), x) ),

a piecewise affine function of 1/lam whose kinks sit where the window
boundary v/lam crosses a component endpoint of S_v below x (or the cap at
the full window (0, x)).  Between kinks lam * m(lam) is affine in lam, so
the supremum is attained at a kink or approached as lam -> infinity,
where it tends to the value of f on an interval immediately left of x
(the left germ).  Enumerating kinks gives the exact value in rational
arithmetic.

Sampling the other variable, f(y)/(x - y) on 0 < y < x, defines the same
operator: the reflection y -> x - y is measure preserving and carries one
condition set onto the other, so both placements share the formula above
term by term.

Unlike the counting kernels, everything here enumerates components
explicitly under a budget; these operators are exercised on small
supports where that is the simpler exact route.
"""

from __future__ import annotations

import random

from gmpy2 import mpq

from .intervals import PeriodicIntervalSet, interval
from .report import VerificationReport
from .scalars import ONE, ZERO, ipow2, pow2, qceil, qfloor
from .stepfn import StepFunction

DEFAULT_BUDGET = 1 << 16


# ---------------------------------------------------------------------------
# component bookkeeping
# ---------------------------------------------------------------------------


def _clipped_components(s: PeriodicIntervalSet, x, budget):
    """Components of s clipped to (0, x), left to right."""
    out = []
    for a, b in s.components(budget):
        a, b = max(a, ZERO), min(b, x)
        if a < b:
            out.append((a, b))
    return out


def _window_measure(comps, cut, x):
    """m( union(comps) intersect (cut, x) ) for components already in (0, x)."""
    total = ZERO
    for a, b in comps:
        lo = a if a > cut else cut
        if lo < b:
            total += b - lo
    return total


def _family_left_germ(fam, x):
    """Whether (x - eps, x) sits inside the family for some eps > 0.

    Descends the stride tree: at each level the only copy that can hold
    points just left of x is the one whose translated offset lands in
    (0, period], clamped to the last copy when x lies beyond the block.
    """
    w = mpq(x) - fam.lo
    if w <= 0:
        return False
    for period, count in fam.strides:
        j = qceil(w / period) - 1
        if j >= count:
            j = count - 1
        w -= period * j
    return 0 < w <= fam.length


def left_germ_value(f: StepFunction, x):
    """The constant value of f on (x - eps, x) for small eps, else 0."""
    x = mpq(x)
    for v, s in f.pieces:
        if any(_family_left_germ(fam, x) for fam in s.families):
            return v
    return ZERO


def _left_germ_by_enumeration(f: StepFunction, x, budget=DEFAULT_BUDGET):
    """Same germ through the component list; cross-check for the descent."""
    x = mpq(x)
    for v, s in f.pieces:
        if any(a < x <= b for a, b in s.components(budget)):
            return v
    return ZERO


# ---------------------------------------------------------------------------
# the two operators
# ---------------------------------------------------------------------------


def maximal_value(f: StepFunction, x, budget=DEFAULT_BUDGET):
    """Exact A f(x) by kink enumeration."""
    x = mpq(x)
    if x <= 0:
        raise ValueError("the window (0, x) needs x > 0")
    piece_comps = [(v, _clipped_components(s, x, budget)) for v, s in f.pieces]

    lams = set()
    for v, comps in piece_comps:
        lams.add(v / x)  # window cap kink
        for a, b in comps:
            if b < x:
                lams.add(v / (x - b))
            if a > 0:
                lams.add(v / (x - a))

    best = left_germ_value(f, x)
    for lam in lams:
        total = ZERO
        for v, comps in piece_comps:
            c = v / lam
            if c > x:
                c = x
            total += _window_measure(comps, x - c, x)
        val = lam * total
        if val > best:
            best = val
    return best


def one_sided_average_sup(B: PeriodicIntervalSet, x, budget=DEFAULT_BUDGET):
    """Exact sup over 0 < t <= x of m(B intersect (x-t, x)) / t.

    The numerator is piecewise affine in t with kinks where x - t crosses
    a component endpoint, so the ratio is monotone between kinks and the
    sup sits on the kink set (t = x included as the cap).
    """
    x = mpq(x)
    if x <= 0:
        raise ValueError("the window (0, x) needs x > 0")
    comps = _clipped_components(B, x, budget)
    ts = {x}
    for a, b in comps:
        if a > 0:
            ts.add(x - a)
        if b < x:
            ts.add(x - b)
    best = ZERO
    for t in ts:
        val = _window_measure(comps, x - t, x) / t
        if val > best:
            best = val
    return best


def indicator_maximal(B: PeriodicIntervalSet, x, budget=DEFAULT_BUDGET):
    return maximal_value(StepFunction.indicator(B), x, budget=budget)


# ---------------------------------------------------------------------------
# the discrete companion on finite sequences
# ---------------------------------------------------------------------------


def seq_counting_sup(seq):
    """Exact sup over n >= 1 of (1/n) #{ k : a_k / k > 1/n }.

    a_k / k > 1/n iff n exceeds k/a_k, so each positive entry owns the
    integer threshold floor(k/a_k) + 1 and the count N_n jumps exactly at
    the sorted thresholds; the ratio peaks at a jump.  Returns (value, n).
    """
    thresholds = []
    for i, a in enumerate(seq):
        a = mpq(a)
        if a < 0:
            raise ValueError("sequence entries must be nonnegative")
        if a > 0:
            k = i + 1
            thresholds.append(qfloor(mpq(k) / a) + 1)
    if not thresholds:
        return ZERO, 1
    thresholds.sort()
    best, best_n = ZERO, 1
    for count, t in enumerate(thresholds, start=1):
        # ties: a later pass at the same t sees the larger count and wins
        val = mpq(count, t)
        if val > best:
            best, best_n = val, int(t)
    return best, best_n


def _seq_sup_brute(seq, n_cap=None):
    """Direct scan over every n up to the last threshold; oracle duty."""
    seq = [mpq(a) for a in seq]
    last = 1
    for i, a in enumerate(seq):
        if a > 0:
            last = max(last, int(qfloor(mpq(i + 1) / a)) + 1)
    if n_cap is not None:
        last = min(last, n_cap)
    best, best_n = ZERO, 1
    for n in range(1, last + 1):
        cnt = sum(1 for i, a in enumerate(seq) if a > 0 and a * n > i + 1)
        val = mpq(cnt, n)
        if val > best:
            best, best_n = val, n
    return best, best_n


def embed_sequence(seq) -> StepFunction:
    """Place a_k on the cell of width 1/K at distance ~k/K left of 1.

    A of the embedded function at x = 1 mirrors the sequence sup with
    lam = K/n, up to within-cell boundary effects; the two numbers are
    reported side by side, never asserted equal.
    """
    K = len(seq)
    if K == 0:
        return StepFunction.zero()
    pieces = []
    for i, a in enumerate(seq):
        a = mpq(a)
        if a > 0:
            k = i + 1
            pieces.append((a, PeriodicIntervalSet.from_interval(
                1 - mpq(k, K), 1 - mpq(k - 1, K))))
    return StepFunction(pieces)


def embedding_report(seq, budget=DEFAULT_BUDGET) -> dict:
    sup, n_star = seq_counting_sup(seq)
    cont = maximal_value(embed_sequence(seq), ONE, budget=budget)
    return {
        "length": len(seq),
        "sequence_sup": sup,
        "sequence_argmax_n": n_star,
        "continuous_at_one": cont,
        "ratio": cont / sup if sup else None,
    }


# ---------------------------------------------------------------------------
# restricted weak-type bound on a dyadic grid
# ---------------------------------------------------------------------------


def weak_type_grid_report(B: PeriodicIntervalSet, lam_values=None,
                          grid_exp=12, budget=DEFAULT_BUDGET) -> dict:
    """Grid certificate for lam * m{A 1_B > lam} <= m(B).

    The exact superlevel set is a union of at most 2 nB + 2 intervals, so
    replacing its measure by the grid-cell count overshoots by at most
    (2 nB + 2) cells; the asserted inequality carries that slack
    explicitly and is exact arithmetic throughout.
    """
    if lam_values is None:
        lam_values = (mpq(1, 8), mpq(1, 4), mpq(1, 2), mpq(3, 4), mpq(9, 10))
    step = pow2(-grid_exp)
    n_grid = int(ipow2(grid_exp))
    f = StepFunction.indicator(B)
    values = [maximal_value(f, i * step, budget=budget)
              for i in range(1, n_grid + 1)]
    mB = B.measure
    n_comp = int(B.n_components)
    slack = (2 * n_comp + 2) * step
    rows = []
    ok = True
    const22 = ZERO
    for lam in sorted(lam_values):
        lam = mpq(lam)
        grid_m = sum(1 for v in values if v > lam) * step
        bound_ok = lam * grid_m <= mB + lam * slack
        ok = ok and bound_ok
        if mB > 0:
            c22 = lam * lam * grid_m / mB
            if c22 > const22:
                const22 = c22
        rows.append({"lam": lam, "grid_measure": grid_m,
                     "bound_holds": bound_ok})
    return {
        "grid_exp": grid_exp,
        "set_measure": mB,
        "n_components": n_comp,
        "slack": slack,
        "rows": rows,
        "all_hold": ok,
        "empirical_l2_constant": const22,
    }


# ---------------------------------------------------------------------------
# randomized inputs for the verification pass
# ---------------------------------------------------------------------------


def random_dyadic_set(rng: random.Random, max_components=4,
                      grid_exp=8) -> PeriodicIntervalSet:
    """Union of up to max_components disjoint dyadic intervals in [0, 1)."""
    n = int(ipow2(grid_exp))
    k = rng.randint(1, max_components)
    cuts = sorted(rng.sample(range(n + 1), 2 * k))
    return PeriodicIntervalSet(
        [interval(mpq(cuts[2 * i], n), mpq(cuts[2 * i + 1], n))
         for i in range(k)])


def random_point(rng: random.Random, grid_exp=10):
    """Dyadic point in (0, 1]."""
    n = int(ipow2(grid_exp))
    return mpq(rng.randint(1, n), n)


def random_sequence(rng: random.Random, max_len=100, max_part=6):
    """Nonnegative rational sequence, about half the entries zero."""
    K = rng.randint(1, max_len)
    out = []
    for _ in range(K):
        if rng.random() < 0.5:
            out.append(ZERO)
        else:
            out.append(mpq(rng.randint(1, max_part),
                           rng.randint(1, max_part)))
    return out


# ---------------------------------------------------------------------------
# verification pass
# ---------------------------------------------------------------------------


def verify_maximal(seed=20260819, n_sets=100, n_points=100, n_seqs=500,
                   grid_sets=3, grid_exp=12) -> VerificationReport:
    """Certify the analog operators against their exact identities.

    Exact singletons pin the closed-form values; the sampled batches are
    still exact arithmetic per instance, `sampled` only flags that the
    instances were drawn at random.
    """
    rep = VerificationReport(system="maximal-analog", params={
        "seed": seed, "n_sets": n_sets, "n_points": n_points,
        "n_seqs": n_seqs, "grid_sets": grid_sets, "grid_exp": grid_exp,
    })
    rng = random.Random(seed)

    full = PeriodicIntervalSet.from_interval(0, 1)
    half = PeriodicIntervalSet.from_interval(0, mpq(1, 2))
    rep.add("analog-identity", "frozen-values", "exact",
            indicator_maximal(full, 1) == 1
            and indicator_maximal(half, mpq(3, 4)) == mpq(2, 3)
            and one_sided_average_sup(half, mpq(3, 4)) == mpq(2, 3)
            and seq_counting_sup([1]) == (mpq(1, 2), 2),
            values={"full": indicator_maximal(full, 1),
                    "half_at_3q": indicator_maximal(half, mpq(3, 4))})

    mism = 0
    above_one = 0
    for _ in range(n_sets):
        B = random_dyadic_set(rng)
        f = StepFunction.indicator(B)
        for _ in range(n_points):
            x = random_point(rng)
            a = maximal_value(f, x)
            h = one_sided_average_sup(B, x)
            if a != h:
                mism += 1
            if a > 1:
                above_one += 1
    rep.add("analog-identity", "indicator-average-equality", "sampled",
            mism == 0 and above_one == 0,
            instances=n_sets * n_points, mismatches=mism,
            above_one=above_one)

    germ_bad = 0
    for _ in range(n_sets):
        B = random_dyadic_set(rng)
        f = StepFunction.indicator(B)
        for _ in range(10):
            x = random_point(rng)
            if left_germ_value(f, x) != _left_germ_by_enumeration(f, x):
                germ_bad += 1
    rep.add("oracle-agreement", "left-germ-descent", "sampled",
            germ_bad == 0, instances=n_sets * 10, mismatches=germ_bad)

    seq_bad = 0
    for _ in range(n_seqs):
        seq = random_sequence(rng)
        if seq_counting_sup(seq) != _seq_sup_brute(seq):
            seq_bad += 1
    emb = embedding_report([ONE] + random_sequence(rng, max_len=31))
    rep.add("analog-identity", "sequence-threshold-sup", "sampled",
            seq_bad == 0, instances=n_seqs, mismatches=seq_bad,
            embedding=emb)

    grid_reports = [weak_type_grid_report(half, grid_exp=grid_exp)]
    for _ in range(max(0, grid_sets - 1)):
        grid_reports.append(weak_type_grid_report(
            random_dyadic_set(rng), grid_exp=grid_exp))
    rep.add("weak-type-grid", "restricted-grid-bound", "sampled",
            all(r["all_hold"] for r in grid_reports),
            grids=[{k: r[k] for k in
                    ("set_measure", "n_components", "all_hold",
                     "empirical_l2_constant")}
                   for r in grid_reports])
    return rep
