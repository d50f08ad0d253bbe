"""Recursive tower systems and their exactly-distributed level variables.

A level-k system on a grid interval I_0 is one base cascade (the mother,
built with the k-th life function in the tower and support offset k-1)
plus one level-(k-1) child per 2^-J00 cell of I_0, where J00 is the
mother's least grid exponent.  Cells inside the same mother retention
region host translates of a single child shape, so the construction stores
one child per region and realizes the per-cell copies as one extra stride
(see intervals.replicate).  All children and the mother share one system
grid exponent J.

The level variables X_1..X_k: X_h restricted to a cell is the hosted
child's X_h for h < k, and X_k takes value (99/100)*2^(1-l) on a trimmed
subset of the mother's retention region at level l.  Trimming happens
per (child joint atom, component) with one left-fraction cut, which makes
every joint measure an exact product, i.e. the variables are independent
on the nose, not just approximately.

Everything is organized around atom *parts*: one entry per full region
path down the recursion, carrying the value tuple, the exact point set,
and the witness exponent window [2^a, 2^b] inside which the counting
ratio must reach the summed values.  Windows nest up the tower because
the life functions satisfy nu_k(N) = nu_{k-1} applied to the end of the
nu_{k-1} schedule started at N; that identity is asserted at build time.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from gmpy2 import mpq

from .base_system import (
    BaseParams,
    BaseSystem,
    LifeFunction,
    SamplingPolicy,
    build_base,
    build_gamma_complements,
    min_J0,
    schedule,
)
from .counting import CountQuery, OrbitSpec, count_N, ratio
from .intervals import (
    CapacityError,
    GridInterval,
    PeriodicIntervalSet,
    pow2,
    random_grid_point,
    replicate,
    scale_components,
    scale_components_remainder,
    sets_disjoint,
)
from .report import VerificationReport
from .scalars import C_099, ipow2
from .stepfn import StepFunction

ZERO = mpq(0)


def level_value(l):
    """The nonzero value a level-l variable takes: (99/100)*2^(1-l)."""
    return C_099 * pow2(1 - l)


def level_mass(M, l):
    """Target mass fraction of that value: (99/100)*2^(l-M-1)."""
    return C_099 * pow2(l - M - 1)


@dataclass(frozen=True)
class LifeTower:
    """Affine life functions nu_k(N) = N + c_k with c_1 = 1 and
    c_{k+1} = M*c_k + 20*(M-1); the closed form is checked against the
    compositional definition at construction."""
    M: int
    c: tuple

    @staticmethod
    def build(M: int, k_max: int) -> "LifeTower":
        if M <= 3:
            raise ValueError("tower needs gain constant M > 3")
        cs = [1]
        while len(cs) < k_max:
            cs.append(M * cs[-1] + 20 * (M - 1))
        tower = LifeTower(M, tuple(cs))
        for k in range(1, k_max):
            n0 = 25  # any probe value works; the identity is affine
            end = schedule(tower.nu(k), n0, M)[-1]
            if tower.nu(k)(end) != tower.nu(k + 1)(n0):
                raise AssertionError(
                    "life tower closed form diverges at k=%d" % (k + 1))
        return tower

    def nu(self, k: int) -> LifeFunction:
        return LifeFunction.affine(self.c[k - 1])


@dataclass(frozen=True)
class DistributedRV:
    """A nonnegative simple random variable described by its exact law on
    an ambient interval: nonzero values mapped to masses.  The geometric
    realization (level sets) is optional; moment bookkeeping only needs
    the law."""
    M: int
    ambient_measure: mpq
    masses: tuple  # ((value, mass), ...) sorted by value descending
    level_sets: Optional[dict] = field(default=None, compare=False)

    @staticmethod
    def canonical(M: int, ambient_measure) -> "DistributedRV":
        """The target law: value (99/100)*2^(1-l) with mass fraction
        (99/100)*2^(l-M-1), l = 1..M."""
        amb = mpq(ambient_measure)
        pairs = tuple(sorted(
            ((level_value(l), level_mass(M, l) * amb) for l in range(1, M + 1)),
            reverse=True))
        return DistributedRV(M, amb, pairs)

    @staticmethod
    def from_law(M, ambient_measure, pairs, level_sets=None):
        merged = {}
        for v, m in pairs:
            v = mpq(v)
            if v == 0:
                continue
            merged[v] = merged.get(v, ZERO) + mpq(m)
        return DistributedRV(M, mpq(ambient_measure),
                             tuple(sorted(merged.items(), reverse=True)),
                             level_sets)

    @property
    def zero_mass(self):
        return self.ambient_measure - sum((m for _, m in self.masses), ZERO)

    @property
    def integral(self):
        return sum((v * m for v, m in self.masses), ZERO)

    @property
    def second_moment(self):
        return sum((v * v * m for v, m in self.masses), ZERO)

    def mass_of(self, value):
        value = mpq(value)
        if value == 0:
            return self.zero_mass
        for v, m in self.masses:
            if v == value:
                return m
        return ZERO

    def is_exactly_distributed(self) -> bool:
        return self.masses == DistributedRV.canonical(
            self.M, self.ambient_measure).masses


@dataclass(frozen=True)
class AtomPart:
    """One cell of the joint partition, at full region-path granularity."""
    path: tuple        # region labels from this level downward
    values: tuple      # (X_1 .. X_k) values on this part
    sets: PeriodicIntervalSet
    witness: tuple     # (lo_exp, hi_exp): the n-window certifying the sum

    @property
    def total(self):
        return sum(self.values, ZERO)


@dataclass(frozen=True, eq=False)
class ChildSlot:
    label: str
    seed: int
    region: PeriodicIntervalSet
    system: "LevelKSystem"


@dataclass(frozen=True, eq=False)
class LevelKSystem:
    I0: GridInterval
    k: int
    M: int
    K_S: int
    K_e: int
    J0: int            # the mother's least grid exponent (base J0 at k=1)
    J: int
    f: StepFunction
    mother: Optional[BaseSystem]
    children: tuple    # ChildSlot per region; empty at k = 1
    parts: tuple       # AtomPart covering I_0 exactly

    @property
    def orbit(self):
        return OrbitSpec(self.J, wrap=False)

    def atom_measures(self):
        """Exact law of the joint vector (X_1..X_k): value tuple -> mass."""
        out = {}
        for part in self.parts:
            out[part.values] = out.get(part.values, ZERO) + part.sets.measure
        return out

    def X_marginal(self, h: int) -> DistributedRV:
        pairs = {}
        sets = {}
        for part in self.parts:
            v = part.values[h - 1]
            if v == 0:
                continue
            pairs[v] = pairs.get(v, ZERO) + part.sets.measure
            sets.setdefault(v, []).append(part.sets)
        level_sets = {v: _concat(ss) for v, ss in sets.items()}
        return DistributedRV.from_law(self.M, self.I0.length,
                                      list(pairs.items()), level_sets)

    def sum_at(self, x):
        for part in self.parts:
            if part.sets.contains(x):
                return part.total, part
        return ZERO, None

    def params_dict(self):
        return {
            "k": self.k, "M": self.M, "K_S": self.K_S, "K_e": self.K_e,
            "J0": self.J0, "J": self.J, "R": self.I0.R,
            "grid_index": self.I0.j, "n_parts": len(self.parts),
        }


def _concat(sets):
    out = PeriodicIntervalSet.empty()
    for s in sets:
        out = out.union_families(s)
    return out


def _replicate_set(region: PeriodicIntervalSet, cell,
                   inner: PeriodicIntervalSet) -> PeriodicIntervalSet:
    fams = []
    for rf in region.families:
        for inf in inner.families:
            fams.append(replicate(rf, cell, inf))
    return PeriodicIntervalSet(fams)


def min_system_J(M: int, k: int, K_S: int, R: int) -> int:
    """Least shared grid exponent for a level-k system on a 2^-R cell.

    The all-top-level lineage dominates: child grid requirements grow with
    both the startup seed and the host resolution, and the deepest seed is
    the end of the mother schedule.
    """
    tower = LifeTower.build(M, max(k, 1))
    nu_k = tower.nu(k)
    sched = schedule(nu_k, K_S, M)
    J00 = min_J0(R, M, nu_k, sched[-1])
    if k == 1:
        return J00
    return min_system_J(M, k - 1, sched[-1], J00)


def exit_exponent(M: int, k: int, K_S: int) -> int:
    """K_e for a level-k system: nu_k applied to the mother schedule end."""
    nu_k = LifeTower.build(M, k).nu(k)
    return nu_k(schedule(nu_k, K_S, M)[-1])


def estimate_level_k(M: int, k: int, K_S: int, R: int = 0) -> dict:
    """Size forecast without building anything: grid exponents, exit time,
    and the atom-part count (which is what actually explodes)."""
    tower = LifeTower.build(M, k)
    chain = []
    seed, res = K_S, R
    for kk in range(k, 0, -1):
        nu_kk = tower.nu(kk)
        sched = schedule(nu_kk, seed, M)
        j00 = min_J0(res, M, nu_kk, sched[-1])
        chain.append({"k": kk, "seed": seed, "J00": j00,
                      "N_M": sched[-1]})
        seed, res = sched[-1], j00
    # parts_k = (2M + 1) * parts_{k-1}: M trimmed + M remainder + off copies
    parts = M + 1
    for _ in range(k - 1):
        parts = (2 * M + 1) * parts
    return {
        "k": k, "M": M, "K_S": K_S, "R": R,
        "grid_exponent": min_system_J(M, k, K_S, R),
        "exit_exponent": exit_exponent(M, k, K_S),
        "mother_chain": chain,
        "atom_parts": parts,
        "atom_tuples": (M + 1) ** k,
    }


def build_level1(I0: GridInterval, K_S: int, M: int,
                 J: Optional[int] = None) -> LevelKSystem:
    """Level 1: one base cascade; X_1 = level value on an exact-measure
    left-trim of each retention set."""
    base = build_base(BaseParams(M=M, nu=LifeFunction.affine(1), N1=K_S,
                                 S=0, I=I0, J=J))
    K_e = base.params.nu(base.schedule[-1])
    parts = []
    rest = []
    for l in range(1, M + 1):
        gamma = base.Gamma_l(l)
        rho = level_mass(M, l) * I0.length / gamma.measure
        parts.append(AtomPart(
            path=("gamma-%d" % l,),
            values=(level_value(l),),
            sets=scale_components(gamma, rho),
            witness=base.window_exponents(l)))
        rest.append(scale_components_remainder(gamma, rho))
    for comp in build_gamma_complements(list(base.B), base.params, base.J0):
        rest.append(comp)
    parts.append(AtomPart(path=("rest",), values=(ZERO,),
                          sets=_concat(rest), witness=(K_S, K_e)))
    return LevelKSystem(I0=I0, k=1, M=M, K_S=K_S, K_e=K_e, J0=base.J0,
                        J=base.J, f=base.f, mother=base, children=(),
                        parts=tuple(parts))


def build_level_k(I0: GridInterval, k: int, K_S: int, M: int,
                  J: Optional[int] = None,
                  max_eager_k: int = 3) -> LevelKSystem:
    """Level-k system with exact joint atoms and witness windows.

    The eager build is capped: parts multiply by 2M+1 per level and the
    grid exponent grows geometrically, so deep towers must go through the
    size estimator instead of thrashing here.
    """
    if not 1 <= k < (1 << M):
        raise ValueError("level count k must satisfy 1 <= k < 2^M")
    if k > max_eager_k:
        raise CapacityError(
            "eager build capped at k=%d; size estimate: %r"
            % (max_eager_k, estimate_level_k(M, k, K_S, I0.R)))
    if J is None:
        J = min_system_J(M, k, K_S, I0.R)
    if k == 1:
        return build_level1(I0, K_S, M, J)

    tower = LifeTower.build(M, k)
    nu_k = tower.nu(k)
    mother = build_base(BaseParams(M=M, nu=nu_k, N1=K_S, S=k - 1, I=I0, J=J))
    J00 = mother.J0
    K_e = nu_k(mother.schedule[-1])
    cell = pow2(-J00)
    cell_I = GridInterval(0, J00)

    child_cache = {}

    def child_for(seed):
        if seed not in child_cache:
            child_cache[seed] = build_level_k(cell_I, k - 1, seed, M, J,
                                              max_eager_k)
        return child_cache[seed]

    off_regions = build_gamma_complements(list(mother.B), mother.params, J00)

    f = mother.f
    parts = []
    children = []
    for l in range(1, M + 1):
        gamma = mother.Gamma_l(l)
        seed = mother.schedule[l - 1]
        child = child_for(seed)
        children.append(ChildSlot("gamma-%d" % l, seed, gamma, child))
        for piece_v, piece_s in child.f.pieces:
            f = f.add_disjoint(StepFunction(
                [(piece_v, _replicate_set(gamma, cell, piece_s))]))
        rho = level_mass(M, l) * I0.length / gamma.measure
        window = mother.window_exponents(l)
        for cp in child.parts:
            kept = scale_components(cp.sets, rho)
            parts.append(AtomPart(
                path=("gamma-%d" % l,) + cp.path,
                values=cp.values + (level_value(l),),
                sets=_replicate_set(gamma, cell, kept),
                witness=cp.witness if any(cp.values) else window))
            dropped = scale_components_remainder(cp.sets, rho)
            parts.append(AtomPart(
                path=("gamma-%d-rest" % l,) + cp.path,
                values=cp.values + (ZERO,),
                sets=_replicate_set(gamma, cell, dropped),
                witness=cp.witness if any(cp.values) else (K_S, K_e)))

    off = _concat(off_regions)
    child = child_for(K_S)
    children.append(ChildSlot("off", K_S, off, child))
    for piece_v, piece_s in child.f.pieces:
        f = f.add_disjoint(StepFunction(
            [(piece_v, _replicate_set(off, cell, piece_s))]))
    for cp in child.parts:
        parts.append(AtomPart(
            path=("off",) + cp.path,
            values=cp.values + (ZERO,),
            sets=_replicate_set(off, cell, cp.sets),
            witness=cp.witness if any(cp.values) else (K_S, K_e)))

    return LevelKSystem(I0=I0, k=k, M=M, K_S=K_S, K_e=K_e, J0=J00, J=J,
                        f=f, mother=mother, children=tuple(children),
                        parts=tuple(parts))


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


def _support_residues(f: StepFunction, M: int, J: int):
    residues = set()
    scale = ipow2(J)
    mod = ipow2(M)
    for _, s in f.pieces:
        for fam in s.families:
            idx = fam.lo * scale
            if idx.denominator != 1 or fam.length != pow2(-J):
                return None
            for period, _ in fam.strides:
                pidx = period * scale
                if pidx.denominator != 1 or pidx.numerator % mod != 0:
                    return None
            residues.add(int(idx.numerator % mod))
    return residues


def verify_level_k(sys: LevelKSystem, policy: SamplingPolicy = None,
                   pair_budget: int = 4000) -> VerificationReport:
    """policy.endpoint_cap / random_count are interpreted per atom part
    (the parts number dozens, not four, at k >= 2)."""
    policy = policy or SamplingPolicy(endpoint_cap=2, random_count=3)
    rep = VerificationReport("level-%d" % sys.k, sys.params_dict())
    M, k = sys.M, sys.k
    mu0 = sys.I0.length

    rep.add("integral-f", "integral", "exact",
            sys.f.integral == k * pow2(1 - M) * mu0,
            integral=sys.f.integral, expected=k * pow2(1 - M) * mu0)

    residues = _support_residues(sys.f, M, sys.J)
    rep.add("support-congruence", "residues-0-to-k-1", "exact",
            residues is not None and residues == set(range(k)),
            residues=sorted(residues) if residues else None)
    rep.add("support-geometry", "pieces-disjoint", "exact",
            sys.f.verify_disjoint_supports())

    # atoms partition the base interval
    total = sum((p.sets.measure for p in sys.parts), ZERO)
    npairs = len(sys.parts) * (len(sys.parts) - 1) // 2
    if npairs <= pair_budget:
        pairs = [(i, j) for i in range(len(sys.parts))
                 for j in range(i + 1, len(sys.parts))]
    else:
        prng = random.Random(policy.seed)
        pairs = {tuple(sorted(prng.sample(range(len(sys.parts)), 2)))
                 for _ in range(pair_budget)}
    disjoint = all(sets_disjoint(sys.parts[i].sets, sys.parts[j].sets)
                   for i, j in pairs)
    rep.add("partition", "atoms-partition", "exact",
            total == mu0 and disjoint, total=total,
            pairs_checked=len(pairs), pairs_total=npairs)

    # each marginal is exactly distributed
    for h in range(1, k + 1):
        rv = sys.X_marginal(h)
        rep.add("distribution-match", "X%d" % h, "exact",
                rv.is_exactly_distributed(),
                masses=[[v, m] for v, m in rv.masses])

    # joint law is the product of the marginals, tuple by tuple
    marg = {h: sys.X_marginal(h) for h in range(1, k + 1)}
    joint = sys.atom_measures()
    ok = True
    worst = None
    for values, mass in sorted(joint.items(), reverse=True):
        expect = mu0
        for h, v in enumerate(values, start=1):
            expect *= marg[h].mass_of(v) / mu0
        if mass != expect:
            ok = False
            worst = {"values": list(values), "mass": mass, "expected": expect}
    rep.add("independence-product", "all-%d-tuples" % len(joint), "exact",
            ok and len(joint) == (M + 1) ** k, tuples=len(joint),
            mismatch=worst)

    # before trimming, every retention level already exceeds its target mass
    mother = sys.mother
    super_ok = all(
        mother.Gamma_l(l).measure >= level_mass(M, l) * mu0
        for l in range(1, M + 1))
    rep.add("gamma-bound", "superdistributed-before-trim", "exact", super_ok)

    # witness windows sit inside the system range and inside the mother
    # window wherever the top variable is live
    win_ok = True
    for part in sys.parts:
        lo, hi = part.witness
        win_ok = win_ok and sys.K_S <= lo <= hi <= sys.K_e
        if k > 1 and part.values[-1] != 0:
            l = next(l for l in range(1, M + 1)
                     if level_value(l) == part.values[-1])
            wlo, whi = mother.window_exponents(l)
            win_ok = win_ok and wlo <= lo <= hi <= whi
    rep.add("witness-window", "nesting", "exact", win_ok)

    # sampled: the count over the whole function equals the sum of counts
    # over the mother function and each region's hosted copies
    if k > 1:
        cell = pow2(-sys.J0)
        phis = [mother.f]
        for slot in sys.children:
            for piece_v, piece_s in slot.system.f.pieces:
                phis.append(StepFunction(
                    [(piece_v, _replicate_set(slot.region, cell, piece_s))]))
        rng = random.Random(policy.seed)
        add_ok = True
        checked = 0
        for part in sys.parts[:: max(1, len(sys.parts) // 6)]:
            fam = part.sets.families[0]
            x = random_grid_point(fam, sys.J, rng)
            for e in (sys.K_S, sys.K_e):
                n = ipow2(e)
                whole = count_N(CountQuery(sys.f, sys.orbit, x, n))
                split = sum(count_N(CountQuery(phi, sys.orbit, x, n))
                            for phi in phis)
                add_ok = add_ok and whole == split
                checked += 1
        rep.add("oracle-agreement", "piecewise-additivity", "sampled",
                add_ok, checked=checked)

    # sampled: the counting ratio reaches the summed values inside every
    # part's witness window
    rng = random.Random(policy.seed)
    instances = []
    ok = True
    for part in sys.parts:
        xs = []
        for fam in part.sets.families:
            if len(xs) >= policy.endpoint_cap:
                break
            xs.extend(fam.iter_component_los(1))
        for _ in range(policy.random_count):
            fam = part.sets.families[rng.randrange(len(part.sets.families))]
            xs.append(random_grid_point(fam, sys.J, rng))
        lo, hi = part.witness
        target = part.total
        for x in xs:
            for e in (lo, (lo + hi) // 2, hi):
                r = ratio(CountQuery(sys.f, sys.orbit, x, ipow2(e)))
                good = r >= target
                ok = ok and good
                instances.append({"path": "/".join(part.path), "x": x,
                                  "n_exp": e, "ratio": r, "target": target,
                                  "ok": good})
    rep.add("counting-lower-bound", "sum-certificate", "sampled", ok,
            checked=len(instances), instances=instances)

    return rep


def run_level_negative_controls(sys: LevelKSystem) -> VerificationReport:
    """A doctored joint law (top variable replaced by a copy of X_1) must
    flunk the product rule."""
    rep = VerificationReport("level-%d-negative-controls" % sys.k,
                             sys.params_dict())
    if sys.k < 2:
        raise ValueError("needs at least two variables")
    mu0 = sys.I0.length
    marg1 = sys.X_marginal(1)
    caught = False
    for v in list(dict(marg1.masses)) + [ZERO]:
        for w in list(dict(marg1.masses)) + [ZERO]:
            joint = marg1.mass_of(v) if v == w else ZERO  # X_k := X_1
            expect = marg1.mass_of(v) * marg1.mass_of(w) / mu0
            if joint != expect:
                caught = True
    rep.add("negative-control", "dependent-copy-caught", "exact", caught)
    return rep
