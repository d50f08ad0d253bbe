"""The base block-cascade system.

Geometry, with scale s_l = 2^(N_l + M - J0) inside a grid interval I of
length 2^-R:

  * level M occupies the even s_M-cells of I;
  * level l (2 <= l < M) occupies the even s_l-cells of the odd
    s_{l+1}-cells left over one scale up;
  * level 1 is the rest: the odd s_2-cells.

That makes the levels an exact partition of I, each level one nested
periodic family.  The retention sets Gamma_l keep the points whose right
eps_l-neighborhood stays inside the union of levels <= l; the cut lands
exactly on copy boundaries, so each Gamma_l is again a single family with
one trimmed stride count (or a shortened base length at level 1).

The step function f places value h on exactly one 2^-J grid cell per
h0*2^-J0 block of every level-1 component, at in-block offset S.  Every
block start is 2^M-aligned on the grid, so the marked cells are exactly
the indices congruent to S mod 2^M.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from gmpy2 import mpq, mpz

from .counting import CountQuery, OrbitSpec, ratio
from .intervals import (
    Family,
    GridInterval,
    PeriodicIntervalSet,
    interval,
    measure_intersection,
    random_grid_point,
    sets_disjoint,
)
from .report import VerificationReport
from .scalars import C_099, C_0995, ipow2, pow2
from .stepfn import StepFunction


class LifeFunction:
    """Monotone lookahead map nu with nu(N) > N, either affine N+c or an
    explicit table."""

    __slots__ = ("kind", "c", "table")

    def __init__(self, kind, c=None, table=None):
        if kind not in ("affine", "tabulated"):
            raise ValueError("kind must be affine or tabulated")
        self.kind = kind
        self.c = c
        self.table = dict(table) if table is not None else None
        if kind == "affine" and (not isinstance(c, int) or c < 1):
            raise ValueError("affine offset must be a positive integer")

    @staticmethod
    def affine(c):
        return LifeFunction("affine", c=c)

    @staticmethod
    def tabulated(pairs):
        return LifeFunction("tabulated", table=pairs)

    def __call__(self, N):
        if self.kind == "affine":
            val = N + self.c
        else:
            if N not in self.table:
                raise KeyError("life function has no entry for N=%d" % N)
            val = self.table[N]
        if val <= N:
            raise ValueError("life function must exceed its argument")
        return val

    def describe(self):
        if self.kind == "affine":
            return "affine+%d" % self.c
        return "tabulated[%d entries]" % len(self.table)

    def __eq__(self, other):
        return (isinstance(other, LifeFunction) and self.kind == other.kind
                and self.c == other.c and self.table == other.table)


NU_1 = LifeFunction.affine(1)


def schedule(nu: LifeFunction, N_1: int, M: int):
    """Startup times N_1 < N_2 < ... < N_M with N_l = 20 + nu(N_{l-1})."""
    out = [N_1]
    for _ in range(M - 1):
        out.append(20 + nu(out[-1]))
    return out


def min_J0(R: int, M: int, nu: LifeFunction, N_M: int) -> int:
    """Least J0 with 2^10 * 2^nu(N_M) * h0 * 2^-J0 < 2^-R, h0 = 2^(M+10)."""
    return nu(N_M) + M + 21 + R


@dataclass(frozen=True)
class BaseParams:
    M: int
    nu: LifeFunction
    N1: int
    S: int
    I: GridInterval
    J: Optional[int] = None  # grid exponent; None means the least legal J0

    def __post_init__(self):
        if not isinstance(self.M, int) or self.M <= 3:
            raise ValueError("gain constant M must be an integer > 3")
        if not isinstance(self.N1, int) or self.N1 <= max(10, self.M):
            raise ValueError("startup time N1 must exceed max(10, M)")
        if not 0 <= self.S < (1 << self.M):
            raise ValueError("support offset S must satisfy 0 <= S < 2^M")
        if not isinstance(self.I, GridInterval):
            raise TypeError("I must be a GridInterval")


@dataclass(frozen=True)
class SamplingPolicy:
    endpoint_cap: int = 64
    random_count: int = 100
    seed: int = 20260819


@dataclass(frozen=True)
class BaseSystem:
    params: BaseParams
    schedule: tuple
    J0: int
    J: int
    h0: mpz
    h: mpz
    B: tuple       # B[l-1] is level l, l = 1..M
    Gamma: tuple   # same indexing
    f: StepFunction

    def B_l(self, l) -> PeriodicIntervalSet:
        return self.B[l - 1]

    def Gamma_l(self, l) -> PeriodicIntervalSet:
        return self.Gamma[l - 1]

    @property
    def M(self):
        return self.params.M

    @property
    def orbit(self):
        return OrbitSpec(self.J, wrap=False)

    def window_exponents(self, l):
        """The n-window [2^N_l, 2^nu(N_l)] where level l must deliver."""
        N_l = self.schedule[l - 1]
        return N_l, self.params.nu(N_l)

    def params_dict(self):
        p = self.params
        return {
            "M": p.M,
            "nu": p.nu.describe(),
            "N1": p.N1,
            "S": p.S,
            "R": p.I.R,
            "grid_index": p.I.j,
            "schedule": list(self.schedule),
            "J0": self.J0,
            "J": self.J,
            "h": self.h,
        }


def _scales(sched, M, J0):
    return {l: pow2(sched[l - 1] + M - J0) for l in range(1, M + 1)}


def build_B_cascade(p: BaseParams, J0: int):
    """Levels [B_1.. B_M] as single-family sets (list index l-1)."""
    M = p.M
    sched = schedule(p.nu, p.N1, M)
    s = _scales(sched, M, J0)
    c_out_exp = J0 - sched[M - 1] - M - p.I.R - 1
    if c_out_exp < 1:
        raise ValueError("J0=%d too small for the outer cell count" % J0)
    fams = {}
    strides = ((2 * s[M], ipow2(c_out_exp)),)
    lo = p.I.lo
    for l in range(M, 1, -1):
        fams[l] = Family(lo, s[l], strides)
        if l > 2:
            inner_count = ipow2(sched[l - 1] - sched[l - 2] - 1)
            strides = strides + ((2 * s[l - 1], inner_count),)
            lo = lo + s[l]
    fams[1] = Family(fams[2].lo + s[2], s[2], fams[2].strides)
    return [PeriodicIntervalSet([fams[l]]) for l in range(1, M + 1)]


def _gamma_split(B, p: BaseParams, J0: int):
    """Per level, the retained family and the eroded remainder.

    Levels 2..M lose whole trailing copies at one stride level (innermost
    for l < M, outermost for l = M); level 1 loses a tail of each base
    interval.  Every cut is on a copy boundary, see the module docstring.
    """
    M = p.M
    sched = schedule(p.nu, p.N1, M)
    kept = {}
    dropped = {}
    for l in range(2, M + 1):
        fam = B[l - 1].families[0]
        level = 0 if l == M else len(fam.strides) - 1
        cut = ipow2(9 + p.nu(sched[l - 1]) - sched[l - 1])
        total = fam.strides[level].count
        kept[l] = fam.with_count(level, total - cut)
        dropped[l] = fam.count_remainder(level, total - cut)
    fam1 = B[0].families[0]
    rho = 1 - pow2(-10)
    kept[1] = fam1.scale_length(rho)
    dropped[1] = fam1.scale_length_remainder(rho)
    to_set = lambda d: [PeriodicIntervalSet([d[l]]) for l in range(1, M + 1)]
    return to_set(kept), to_set(dropped)


def build_gammas(B, p: BaseParams, J0: int):
    return _gamma_split(B, p, J0)[0]


def build_gamma_complements(B, p: BaseParams, J0: int):
    return _gamma_split(B, p, J0)[1]


def build_f(p: BaseParams, B1: PeriodicIntervalSet, J: int) -> StepFunction:
    """Value h on the S-offset grid cell of every h0*2^-J0 block of B1."""
    M = p.M
    sched = schedule(p.nu, p.N1, M)
    J0 = min_J0(p.I.R, M, p.nu, sched[M - 1])
    if J < J0:
        raise ValueError("J must be at least J0=%d" % J0)
    h0 = ipow2(M + 10)
    h = h0 << (J - J0)
    block = h0 * pow2(-J0)
    fam1 = B1.families[0]
    nblocks = fam1.length / block
    if nblocks.denominator != 1:
        raise ValueError("level-1 components are not whole blocks")
    support = Family(fam1.lo + p.S * pow2(-J), pow2(-J),
                     fam1.strides + ((block, nblocks.numerator),))
    return StepFunction([(h, PeriodicIntervalSet([support]))])


def build_base(p: BaseParams) -> BaseSystem:
    sched = schedule(p.nu, p.N1, p.M)
    J0 = min_J0(p.I.R, p.M, p.nu, sched[p.M - 1])
    J = J0 if p.J is None else p.J
    if J < J0:
        raise ValueError("J=%d is below the least legal grid exponent %d"
                         % (J, J0))
    B = build_B_cascade(p, J0)
    Gamma = build_gammas(B, p, J0)
    f = build_f(p, B[0], J)
    return BaseSystem(params=p, schedule=tuple(sched), J0=J0, J=J,
                      h0=ipow2(p.M + 10), h=ipow2(p.M + 10 + J - J0),
                      B=tuple(B), Gamma=tuple(Gamma), f=f)


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


def check_support_congruence(f: StepFunction, S: int, M: int, J: int) -> bool:
    """Structurally: every support cell is a single 2^-J grid cell whose
    index is congruent to S mod 2^M."""
    scale = ipow2(J)
    mod = ipow2(M)
    if len(f.pieces) != 1:
        return False
    for fam in f.pieces[0][1].families:
        lo_idx = fam.lo * scale
        if lo_idx.denominator != 1 or lo_idx.numerator % mod != S:
            return False
        if fam.length != pow2(-J):
            return False
        for period, _ in fam.strides:
            p_idx = period * scale
            if p_idx.denominator != 1 or p_idx.numerator % mod != 0:
                return False
    return True


def _home_cell_family(sys: BaseSystem, l: int) -> Family:
    """The cell family one scale above level l (the home that level l's
    even cells subdivide); for l = M this is I itself."""
    if l == sys.M:
        return sys.params.I.as_family()
    fam = sys.B_l(l).families[0]
    s_up = pow2(sys.schedule[l] + sys.M - sys.J0)
    return Family(fam.lo, s_up, fam.strides[:-1])


def _counting_samples(sys, fam, policy, rng):
    xs = list(fam.iter_component_los(policy.endpoint_cap))
    for _ in range(policy.random_count):
        xs.append(random_grid_point(fam, sys.J, rng))
    return xs


def verify_base(sys: BaseSystem, policy: SamplingPolicy = None,
                report: VerificationReport = None) -> VerificationReport:
    policy = policy or SamplingPolicy()
    rep = report or VerificationReport("base", sys.params_dict())
    M = sys.M
    mu_I = sys.params.I.length
    I_set = sys.params.I.as_set()

    # exact measure identities
    rep.add("measure-identity", "mu-B%d" % M, "exact",
            sys.B_l(M).measure == mu_I / 2, expected=mu_I / 2)
    for l in range(2, M):
        rep.add("measure-identity", "mu-B%d" % l, "exact",
                sys.B_l(l).measure == mu_I * pow2(l - M - 1),
                expected=mu_I * pow2(l - M - 1))
    rep.add("measure-identity", "mu-B1", "exact",
            sys.B_l(1).measure == mu_I * pow2(1 - M),
            expected=mu_I * pow2(1 - M))

    # the levels partition I exactly
    disjoint = all(sets_disjoint(sys.B[i], sys.B[j])
                   for i in range(M) for j in range(i + 1, M))
    inside = all(measure_intersection(b, I_set) == b.measure for b in sys.B)
    total = sum(b.measure for b in sys.B)
    rep.add("partition", "levels-partition-I", "exact",
            disjoint and inside and total == mu_I, total=total)

    # retention sets: containment, exact measure bounds, grid alignment
    for l in range(1, M + 1):
        g, b = sys.Gamma_l(l), sys.B_l(l)
        ok = (measure_intersection(g, b) == g.measure
              and g.measure > C_099 * pow2(-M + l - 1) * mu_I
              and g.measure > C_099 * b.measure)
        rep.add("gamma-bound", "gamma%d" % l, "exact", ok,
                measure=g.measure, floor=C_099 * pow2(-M + l - 1) * mu_I)
        rep.add("grid-exactness", "gamma%d-on-grid" % l, "exact",
                g.is_grid_aligned(sys.J0) and b.is_grid_aligned(sys.J0))

    # the step function
    rep.add("integral-f", "integral", "exact",
            sys.f.integral == pow2(1 - M) * mu_I,
            integral=sys.f.integral, expected=pow2(1 - M) * mu_I)
    supp = sys.f.support()
    in_B1 = measure_intersection(supp, sys.B_l(1)) == supp.measure
    off_rest = all(sets_disjoint(supp, sys.B_l(l)) for l in range(2, M + 1))
    rep.add("support-geometry", "support-in-level-1", "exact",
            in_B1 and off_rest)
    blocks = supp.families[0].strides[-1]
    rep.add("support-geometry", "blocks-per-component", "exact",
            blocks.count == ipow2(sys.schedule[1] - 10)
            and blocks.period == sys.h0 * pow2(-sys.J0),
            blocks=blocks.count)
    rep.add("support-congruence", "offset-mod-2M", "exact",
            check_support_congruence(sys.f, sys.params.S, M, sys.J))
    rep.add("support-geometry", "single-value-h", "exact",
            len(sys.f.pieces) == 1 and sys.f.pieces[0][0] == sys.h,
            h=sys.h)

    # J0 is the least exponent satisfying the separation inequality
    nu_NM = sys.params.nu(sys.schedule[M - 1])
    sep = lambda j0: pow2(10 + nu_NM) * sys.h0 * pow2(-j0) < pow2(-sys.params.I.R)
    rep.add("schedule-min-J0", "separation-inequality", "exact",
            sep(sys.J0) and not sep(min_J0(
                sys.params.I.R, M, sys.params.nu, sys.schedule[M - 1]) - 1),
            J0=sys.J0)

    # equidistribution in every home cell
    for l in range(2, M + 1):
        home = PeriodicIntervalSet([_home_cell_family(sys, l)])
        half = home.measure / 2
        own = measure_intersection(sys.B_l(l), home)
        downward = sum(measure_intersection(sys.B_l(i), home)
                       for i in range(1, l))
        rep.add("equidistribution", "home-cell-%d" % l, "exact",
                own == half and downward == half, half=half)

    # J-independence: the sets depend only on J0; f rescales with J
    p2 = BaseParams(M, sys.params.nu, sys.params.N1, sys.params.S,
                    sys.params.I, sys.J + 7)
    sys2 = build_base(p2)
    f2 = sys2.f
    rep.add("j-independence", "sets-match", "exact",
            sys2.B == sys.B and sys2.Gamma == sys.Gamma
            and sys2.J0 == sys.J0)
    rep.add("j-independence", "f-rescales", "exact",
            f2.integral == sys.f.integral and sys2.h == sys.h << 7)

    # sampled: the counting lower bound on every retention level
    rng = random.Random(policy.seed)
    for l in range(1, M + 1):
        fam = sys.Gamma_l(l).families[0]
        xs = _counting_samples(sys, fam, policy, rng)
        N_l, nu_l = sys.window_exponents(l)
        floor_l = C_099 * pow2(-l + 1)
        instances = []
        ok = True
        for x in xs:
            for e in (N_l, (N_l + nu_l) // 2, nu_l):
                n = ipow2(e)
                r = ratio(CountQuery(sys.f, sys.orbit, x, n))
                passed = r > floor_l
                ok = ok and passed
                instances.append({"x": x, "n_exp": e, "ratio": r,
                                  "ok": passed})
        rep.add("counting-lower-bound", "level-%d" % l, "sampled", ok,
                floor=floor_l, checked=len(instances), instances=instances)

    # sampled: density of level 1 in orbit windows inside each home cell
    wrng = random.Random(policy.seed + 1)
    blk = sys.h * pow2(-sys.J)
    for l in range(2, M + 1):
        home = _home_cell_family(sys, l)
        N_l, nu_l = sys.window_exponents(l)
        density = pow2(-(l - 1))
        instances = []
        ok = True
        for e in (N_l, (N_l + nu_l) // 2, nu_l):
            wlen = ipow2(e) * blk
            endpoints = list(home.iter_component_los(8))
            xs = list(endpoints)
            for _ in range(8):
                base = wrng.choice(endpoints)
                room = int((home.length - wlen) / pow2(-sys.J))
                xs.append(base + wrng.randrange(room + 1) * pow2(-sys.J))
            for x in xs:
                got = measure_intersection(
                    sys.B_l(1), PeriodicIntervalSet([interval(x, x + wlen)]))
                passed = got > C_0995 * wlen * density
                ok = ok and passed
                instances.append({"x": x, "n_exp": e, "mass": got,
                                  "ok": passed})
        rep.add("window-density", "home-cell-%d" % l, "sampled", ok,
                checked=len(instances), instances=instances)

    return rep


# ---------------------------------------------------------------------------
# negative controls: corrupted variants the verifier must catch
# ---------------------------------------------------------------------------


def corrupt_shift_support(sys: BaseSystem) -> StepFunction:
    """Move every support cell one grid step right (offset S+1)."""
    return sys.f.translate(pow2(-sys.J))


def corrupt_sparsify_support(sys: BaseSystem) -> StepFunction:
    """Drop the second half of the support blocks in every component."""
    fam = sys.f.pieces[0][1].families[0]
    half = fam.strides[-1].count // 2
    return StepFunction(
        [(sys.h, PeriodicIntervalSet([fam.with_count(len(fam.strides) - 1,
                                                     half)]))])


def run_negative_controls(sys: BaseSystem) -> VerificationReport:
    """Each control passes iff the verifier catches the corruption."""
    rep = VerificationReport("base-negative-controls", sys.params_dict())

    shifted = corrupt_shift_support(sys)
    rep.add("negative-control", "shifted-support-caught", "exact",
            check_support_congruence(sys.f, sys.params.S, sys.M, sys.J)
            and not check_support_congruence(shifted, sys.params.S, sys.M,
                                             sys.J))

    # a sparsified f must fail the counting bound at a witness placed in
    # the deleted half of a level-1 component (still inside the retention
    # set, whose cut only shaves the last 2^-10 fraction)
    sparse = corrupt_sparsify_support(sys)
    fam1 = sys.B_l(1).families[0]
    x = fam1.lo + fam1.length / 2
    n = ipow2(sys.schedule[0])
    floor_1 = C_099 * pow2(0)
    good = ratio(CountQuery(sys.f, sys.orbit, x, n))
    bad = ratio(CountQuery(sparse, sys.orbit, x, n))
    rep.add("negative-control", "sparsified-support-caught", "sampled",
            good > floor_1 and bad <= floor_1, good=good, bad=bad,
            x=x, floor=floor_1)
    return rep
